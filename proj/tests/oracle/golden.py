#!/usr/bin/env python3
"""Independent oracle for the golden digests and wire fixtures.

Re-derives every hash from the documented canonical serializations using
hashlib and json only, so the C++ implementation is checked against code that
shares nothing with it. Writes the frame fixtures into tests/fixtures/ and
prints the digests that the unit tests freeze.

    python3 tests/oracle/golden.py
"""

import hashlib
import json
import os
import struct

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(HERE, "..", "fixtures")


def sha(b: bytes) -> str:
    return hashlib.sha256(b).hexdigest()


def canon(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def tx(sender, receiver, value, data, timestamp, nonce):
    pre = f"sender={sender}|receiver={receiver}|value={value}|data={data}|timestamp={timestamp}|nonce={nonce}"
    return {
        "sender": sender, "receiver": receiver, "value": value, "data": data,
        "timestamp": timestamp, "nonce": nonce, "id": sha(pre.encode()),
    }


def tx_root(txs) -> str:
    return sha(b"".join(bytes.fromhex(t["id"]) for t in txs))


def state_doc(balances, contract):
    return {"balances": {str(k): v for k, v in balances.items()}, "contract": contract}


def state_digest(state) -> str:
    return sha(canon(state).encode())


def block(height, parent, txs, timestamp, miner, difficulty, total, state, nonce=0):
    b = {
        "height": height, "parent_hash": parent, "data": txs, "timestamp": timestamp,
        "miner_id": miner, "difficulty": difficulty, "total_difficulty": total,
        "transactions_root": tx_root(txs), "state": state, "nonce": nonce,
    }
    pre = (f"height={height}|parent_hash={parent}|timestamp={timestamp}|miner_id={miner}"
           f"|difficulty={difficulty}|total_difficulty={total}|transactions_root={b['transactions_root']}"
           f"|state_digest={state_digest(state)}|nonce={nonce}")
    b["hash"] = sha(pre.encode())
    return b


def frame(type_, payload) -> bytes:
    body = canon({"type": type_, "payload": payload}).encode()
    return struct.pack(">I", len(body)) + body


def main():
    out = {}

    t = tx(1, 2, 5, "", 10, 0)
    out["tx_1_2_5_empty_10_0"] = t["id"]

    a = tx(1, 2, 5, "", 10, 0)
    b = tx(2, 3, 1, "", 11, 0)
    out["root_empty"] = tx_root([])
    out["root_ab"] = tx_root([a, b])
    out["root_ba"] = tx_root([b, a])

    out["state_empty"] = state_digest(state_doc({}, {}))

    # Default network: PoA, signers 0..3, period 5, in-turn 2, no-turn 1, delay 2,
    # 1000 coins per node, no contract storage besides the bound consensus descriptor.
    descriptor = "poa;signers=0,1,2,3;block_period=5;diff_inturn=2;diff_noturn=1;delay_noturn=2"
    balances = {i: 1000 for i in range(4)}
    g_state = state_doc(balances, {"_consensus": descriptor})
    genesis = block(0, "0" * 64, [], 0, 0, 0, 0, g_state)
    out["genesis_default"] = genesis["hash"]

    # Two honest blocks on top of it: signer 1 in turn at height 1, signer 2 in turn at height 2.
    t1 = tx(0, 1, 10, "", 1, 0)
    b1_bal = dict(balances)
    b1_bal[0] -= 10
    b1_bal[1] += 10
    b1_state = state_doc(b1_bal, {"_consensus": descriptor})
    b1 = block(1, genesis["hash"], [t1], 5, 1, 2, 2, b1_state)
    b2 = block(2, b1["hash"], [], 10, 2, 2, 4, b1_state)
    out["block1"] = b1["hash"]
    out["block2"] = b2["hash"]

    fixtures = {
        "status_req": frame("status_req", {}),
        "status_rep": frame("status_rep", {"tip_hash": b2["hash"], "total_difficulty": f"{4:020d}"}),
        "block_req": frame("block_req", {"known_hashes": [b2["hash"], b1["hash"], genesis["hash"]]}),
        "block_rep": frame("block_rep", {"common": genesis["hash"], "partial": [b1, b2]}),
        "block_rep_none": frame("block_rep", {"common": None}),
        "mempool_req": frame("mempool_req", {}),
        "mempool_rep": frame("mempool_rep", {"transactions": [a, tx(3, 0, 0, '{"function":"increment","inputs":[2]}', 12, 4)]}),
    }
    os.makedirs(FIXTURES, exist_ok=True)
    for name, data in fixtures.items():
        with open(os.path.join(FIXTURES, name + ".bin"), "wb") as f:
            f.write(data)
        out["frame_" + name] = sha(data)

    for k, v in out.items():
        print(f"{k} {v}")


if __name__ == "__main__":
    main()
