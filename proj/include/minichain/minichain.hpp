#pragma once

#include <minichain/block.hpp>
#include <minichain/clock.hpp>
#include <minichain/consensus/poa.hpp>
#include <minichain/consensus/pow.hpp>
#include <minichain/consensus/protocol.hpp>
#include <minichain/contract.hpp>
#include <minichain/enode.hpp>
#include <minichain/hash.hpp>
#include <minichain/mempool.hpp>
#include <minichain/message.hpp>
#include <minichain/network.hpp>
#include <minichain/node.hpp>
#include <minichain/scenario.hpp>
#include <minichain/simulator.hpp>
#include <minichain/state.hpp>
#include <minichain/state_machine.hpp>
#include <minichain/tcp.hpp>
#include <minichain/transaction.hpp>
