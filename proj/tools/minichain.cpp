// Command-line entry point: stepped scenario runs, standalone real-time nodes, and a control client.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <minichain/minichain.hpp>

namespace fs = std::filesystem;
using namespace minichain;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_invalid = 1;
constexpr int exit_internal = 2;

int cmd_run(const std::string& scenario_path, const std::string& out_dir, const std::vector<std::string>& overrides)
{
    Scenario scenario;
    try {
        if (!fs::exists(scenario_path)) {
            std::cerr << "error: scenario file not found: " << scenario_path << "\n";
            return exit_invalid;
        }
        scenario = load_scenario(scenario_path, overrides);
    } catch (const ScenarioError& e) {
        std::cerr << "error: invalid scenario " << scenario_path << ": " << e.what() << "\n";
        return exit_invalid;
    }

    try {
        std::string csv;
        RunReport report = run_scenario(scenario, &csv);
        fs::create_directories(out_dir);
        std::ofstream(fs::path(out_dir) / "report.json") << to_json(report).dump(2) << "\n";
        std::ofstream(fs::path(out_dir) / "steps.csv") << csv;

        const auto& first = report.nodes.front();
        std::cout << "converged=" << (report.convergence_step ? "yes" : "no");
        if (report.convergence_step) std::cout << " step=" << *report.convergence_step;
        std::cout << " chain_length=" << first.chain_length << " forks=" << report.forks << " steps=" << report.steps << "\n";
        return exit_ok;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
}

int cmd_node(const std::string& enode, const std::string& genesis_path, const std::vector<std::string>& peers, bool mine,
             int control_port, int chain_ms, int mempool_ms)
{
    NodeIdentity ident;
    Scenario config;
    try {
        ident = parse_enode(enode);
        for (const auto& p : peers) parse_enode(p);
        config = load_scenario(genesis_path);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_invalid;
    }

    // Handled synchronously below; block before any thread starts so all threads inherit the mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    auto network = std::make_shared<TcpNetwork>();
    auto registry = std::make_shared<const ContractRegistry>(contracts::builtin(config.contract));
    Node node(ident, make_consensus(config), registry, std::make_unique<RealTimeClock>(), network);
    for (const auto& p : peers) node.add_peer(p);

    RealtimeOptions options;
    options.chain_interval = std::chrono::milliseconds(chain_ms);
    options.mempool_interval = std::chrono::milliseconds(mempool_ms);
    options.mempool_offset = std::chrono::milliseconds(mempool_ms / 2);
    RealtimeNode runner(node, options);

    NodeIdentity control{ident.id, ident.host, static_cast<std::uint16_t>(control_port ? control_port : ident.port + 1000)};
    try {
        runner.start();
        network->listen(control, control_handler(node));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_internal;
    }
    if (mine) node.start_mining();

    std::cout << "node " << format_enode(ident) << " listening; control port " << control.port << "; genesis "
              << node.consensus().genesis().hash.hex() << std::endl;

    int sig = 0;
    sigwait(&signals, &sig);

    node.stop_mining();
    network->unlisten(control);
    runner.stop();
    std::cout << "node " << ident.id << " stopped at height " << node.height() << " tip " << node.tip_hash().hex() << std::endl;
    return exit_ok;
}

int cmd_ctl(const std::string& host, int port, const ControlMessage& msg)
{
    auto reply = control_request(host, static_cast<std::uint16_t>(port), msg);
    if (!reply) {
        std::cerr << "error: no reply from control socket " << host << ":" << port << "\n";
        return exit_internal;
    }
    std::cout << encode_body(*reply) << "\n";
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"minichain: stepped blockchain simulations and real-time nodes"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a scenario file and write report.json and steps.csv");
    std::string scenario_path;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    run->add_option("scenario", scenario_path, "Scenario file (TOML)")->required();
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--override", overrides, "Override a scenario key, e.g. steps=10 or consensus.block_period=3");

    auto enode_check = CLI::Validator(
        [](std::string& s) -> std::string {
            try {
                parse_enode(s);
                return {};
            } catch (const EnodeError& e) {
                return e.what();
            }
        },
        "ENODE");

    auto* node = app.add_subcommand("node", "Run one real-time node over TCP until interrupted");
    std::string enode;
    std::string genesis_path;
    std::vector<std::string> peers;
    bool mine = false;
    int control_port = 0;
    int chain_ms = 2000;
    int mempool_ms = 2000;
    node->add_option("--enode", enode, "enode://<id>@<host>:<port> of this node")->required()->check(enode_check);
    node->add_option("--genesis", genesis_path, "Genesis/network file (scenario schema)")->required()->check(CLI::ExistingFile);
    node->add_option("--peer", peers, "Peer enode; repeatable")->check(enode_check);
    node->add_flag("--mine", mine, "Start block production");
    node->add_option("--control-port", control_port, "Control socket port (default: port + 1000)");
    node->add_option("--chain-interval-ms", chain_ms, "Chain pinger interval")->check(CLI::PositiveNumber);
    node->add_option("--mempool-interval-ms", mempool_ms, "Mempool pinger interval")->check(CLI::PositiveNumber);

    auto* ctl = app.add_subcommand("ctl", "Talk to a running node's control socket");
    ctl->require_subcommand(1);
    std::string ctl_host = "127.0.0.1";
    int ctl_port = 0;
    ctl->add_option("--host", ctl_host, "Control host");
    ctl->add_option("--port", ctl_port, "Control port")->required();
    auto* status = ctl->add_subcommand("status", "Print the node's tip and mempool summary");
    auto* submit = ctl->add_subcommand("submit", "Submit a transaction from the node");
    SubmitTxRequest submit_req;
    submit->add_option("--to", submit_req.receiver, "Receiver node id")->required();
    submit->add_option("--value", submit_req.value, "Amount to transfer");
    submit->add_option("--data", submit_req.data, "Payload, e.g. a contract call document");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_invalid;
    }

    if (run->parsed()) return cmd_run(scenario_path, out_dir, overrides);
    if (node->parsed()) return cmd_node(enode, genesis_path, peers, mine, control_port, chain_ms, mempool_ms);
    if (status->parsed()) return cmd_ctl(ctl_host, ctl_port, ControlMessage{DumpStatusRequest{}});
    if (submit->parsed()) return cmd_ctl(ctl_host, ctl_port, ControlMessage{submit_req});
    return exit_invalid;
}
