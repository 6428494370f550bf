// Command-line front end: plan, run, inspect, gen-inputs, bench.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "memplan/bytecode/disassemble.hpp"
#include "memplan/cli/bench.hpp"
#include "memplan/engine/channel.hpp"
#include "memplan/error.hpp"

using namespace memplan;
using namespace memplan::cli;

namespace {
    /* Default problem sizes for bench when --size does not override them. */
    const std::map<std::string, std::uint64_t> default_sizes = {
        {"merge", 256},  {"sort", 256},   {"ljoin", 64},     {"mvmul", 16},        {"binfclayer", 32},
        {"rsum", 256},   {"rstats", 256}, {"rmvmul", 16},    {"n_rmatmul", 16},    {"t_rmatmul", 16},
        {"millionaire", 1},
    };

    std::string read_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) {
            throw InputError("cannot open " + path);
        }
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    }

    void write_file(const std::string& path, const std::string& text) {
        std::ofstream out(path);
        if (!out) {
            throw IoError("cannot write " + path);
        }
        out << text;
    }

    /* Stats go to a file when a path is given, otherwise to stderr so stdout stays the program output. */
    void emit_stats(const std::string& path, const std::string& json) {
        if (path.empty()) {
            std::cerr << json << '\n';
        } else {
            write_file(path, json + "\n");
        }
    }

    RunConfig config_for(const std::string& path, bytecode::DriverId driver) {
        return path.empty() ? default_config(driver) : load_config(path);
    }

    struct PlanArgs {
        ProgramSpec spec;
        std::string config;
        std::string output;
        std::string stats;
        int worker = -1;
        bool keep = false;
    };

    void do_plan(const PlanArgs& a) {
        RunConfig cfg = config_for(a.config, program_driver(a.spec));
        WorkerId first = a.worker < 0 ? 0 : static_cast<WorkerId>(a.worker);
        WorkerId last = a.worker < 0 ? a.spec.worker_count : first + 1;
        for (WorkerId w = first; w != last; w++) {
            std::string out = worker_path(a.output, w, a.spec.worker_count);
            PlanReport r = plan_program(a.spec, cfg, w, out, a.keep);
            emit_stats(a.stats.empty() ? "" : worker_path(a.stats, w, a.spec.worker_count), r.to_json());
        }
    }

    struct RunArgs {
        std::string config;
        std::string program;
        std::string input;
        std::string output;
        std::string stats;
        WorkerId workers = 1;
        int worker = -1;
    };

    void do_run(const RunArgs& a) {
        RunConfig cfg = load_config(a.config);
        auto write_output = [&](WorkerId w, const std::string& text) {
            if (a.output.empty()) {
                std::cout << text;
            } else {
                write_file(worker_path(a.output, w, a.workers), text);
            }
        };
        if (a.worker >= 0) {
            auto w = static_cast<WorkerId>(a.worker);
            std::ifstream in(worker_path(a.input, w, a.workers));
            if (!in) {
                throw InputError("cannot open input " + worker_path(a.input, w, a.workers));
            }
            std::unique_ptr<engine::Channel> channel;
            if (a.workers > 1) {
                std::vector<std::string> endpoints;
                for (WorkerId i = 0; i != a.workers; i++) {
                    endpoints.push_back(cfg.worker(i).endpoint);
                }
                channel = std::make_unique<engine::TcpChannel>(w, endpoints);
            }
            std::ostringstream out;
            engine::ExecStats st = run_worker(worker_path(a.program, w, a.workers), cfg, w, channel.get(), in, out);
            write_output(w, out.str());
            emit_stats(a.stats.empty() ? "" : worker_path(a.stats, w, a.workers), st.to_json());
            return;
        }
        std::vector<std::string> programs, inputs;
        for (WorkerId w = 0; w != a.workers; w++) {
            programs.push_back(worker_path(a.program, w, a.workers));
            inputs.push_back(read_file(worker_path(a.input, w, a.workers)));
        }
        std::vector<WorkerRun> runs = run_in_process(programs, cfg, inputs);
        for (WorkerId w = 0; w != a.workers; w++) {
            write_output(w, runs[w].output);
            emit_stats(a.stats.empty() ? "" : worker_path(a.stats, w, a.workers), runs[w].stats.to_json());
        }
    }

    struct GenArgs {
        ProgramSpec spec;
        std::string config;
        std::string out_dir;
        std::uint64_t seed = 1;
    };

    void do_gen(const GenArgs& a) {
        RunConfig cfg = config_for(a.config, program_driver(a.spec));
        workloads::GeneratedInputs g = program_inputs(a.spec, a.seed, cfg);
        std::filesystem::create_directories(a.out_dir);
        for (WorkerId w = 0; w != g.worker_inputs.size(); w++) {
            write_file(worker_path(a.out_dir + "/input.txt", w, a.spec.worker_count), g.worker_inputs[w]);
        }
        write_file(a.out_dir + "/expected.txt", g.expected_output);
    }

    struct BenchArgs {
        std::vector<std::string> programs;
        std::vector<std::string> sizes;
        std::vector<std::string> scenarios;
        std::string bitwire_config;
        std::string batch_config;
        std::string out_dir = "bench-out";
        std::uint64_t seed = 1;
        double ratio = 4;
        double lookahead_margin = 0;
        WorkerId workers = 1;
    };

    void do_bench(const BenchArgs& a) {
        std::map<std::string, std::uint64_t> sizes = default_sizes;
        for (const std::string& s : a.sizes) {
            auto eq = s.find('=');
            if (eq == std::string::npos) {
                throw SpecError("--size expects name=n, got '" + s + "'");
            }
            sizes[s.substr(0, eq)] = std::stoull(s.substr(eq + 1));
        }
        BenchSettings settings;
        settings.seed = a.seed;
        settings.footprint_ratio = a.ratio;
        settings.lookahead_margin = a.lookahead_margin;
        settings.bitwire = config_for(a.bitwire_config, bytecode::DriverId::BitWire);
        settings.batch = config_for(a.batch_config, bytecode::DriverId::LeveledBatch);
        settings.work_dir = a.out_dir + "/programs";
        std::vector<std::string> names = a.programs;
        if (names.empty()) {
            for (workloads::Workload w : workloads::all_workloads) {
                names.emplace_back(workloads::name(w));
            }
        }
        for (const std::string& name : names) {
            if (!sizes.contains(name)) {
                throw SpecError("unknown program '" + name + "'");
            }
            settings.programs.push_back({name, sizes[name], a.workers, 0});
        }
        if (!a.scenarios.empty()) {
            settings.scenarios.clear();
            for (const std::string& s : a.scenarios) {
                settings.scenarios.push_back(parse_scenario(s));
            }
            if (std::find(settings.scenarios.begin(), settings.scenarios.end(), Scenario::Unbounded)
                == settings.scenarios.end()) {
                settings.scenarios.insert(settings.scenarios.begin(), Scenario::Unbounded);
            }
        }
        BenchReport report = run_bench(settings);
        std::filesystem::create_directories(a.out_dir);
        write_file(a.out_dir + "/results.csv", report.to_csv());
        write_file(a.out_dir + "/ratios.csv", report.to_ratio_csv());
        write_file(a.out_dir + "/bench.gp", gnuplot_script("ratios.csv"));
        write_file(a.out_dir + "/report.json", report.to_json() + "\n");
        std::filesystem::remove_all(settings.work_dir);
        std::cout << report.to_ratio_csv();
    }

    void add_program_options(CLI::App* cmd, ProgramSpec& spec) {
        cmd->add_option("--program", spec.name, "Workload name or 'millionaire'")->required();
        cmd->add_option("-n,--size", spec.n, "Problem size (power of two)")->default_val(1);
        cmd->add_option("--workers", spec.worker_count, "Worker count")->default_val(1);
        cmd->add_option("--tile", spec.tile, "Tile side for t_rmatmul");
    }
}

int main(int argc, char** argv) {
    CLI::App app{"Memory-planned secure computation: plan, run and benchmark bytecode programs"};
    app.require_subcommand(1);

    PlanArgs plan;
    CLI::App* plan_cmd = app.add_subcommand("plan", "Unroll a program and plan its memory");
    add_program_options(plan_cmd, plan.spec);
    plan_cmd->add_option("-c,--config", plan.config, "YAML run configuration");
    plan_cmd->add_option("-o,--output", plan.output, "Memory program path ({worker} is substituted)")->required();
    plan_cmd->add_option("--worker", plan.worker, "Plan only this worker");
    plan_cmd->add_option("--stats", plan.stats, "Write plan stats JSON here instead of stderr");
    plan_cmd->add_flag("--keep-intermediates", plan.keep, "Keep the virtual and physical bytecodes");

    RunArgs run;
    CLI::App* run_cmd = app.add_subcommand("run", "Execute memory programs");
    run_cmd->add_option("-c,--config", run.config, "YAML run configuration")->required();
    run_cmd->add_option("-p,--program", run.program, "Memory program path")->required();
    run_cmd->add_option("-i,--input", run.input, "Input file")->required();
    run_cmd->add_option("-o,--output", run.output, "Output file (default stdout)");
    run_cmd->add_option("--stats", run.stats, "Write execution stats JSON here instead of stderr");
    run_cmd->add_option("--workers", run.workers, "Worker count")->default_val(1);
    run_cmd->add_option("--worker", run.worker, "Run only this worker over TCP; otherwise all workers run in-process");

    std::string inspect_path;
    CLI::App* inspect_cmd = app.add_subcommand("inspect", "Disassemble a program file");
    inspect_cmd->add_option("path", inspect_path, "Program file")->required();

    GenArgs gen;
    CLI::App* gen_cmd = app.add_subcommand("gen-inputs", "Write inputs and the expected output");
    add_program_options(gen_cmd, gen.spec);
    gen_cmd->add_option("-c,--config", gen.config, "YAML run configuration (batch dimension)");
    gen_cmd->add_option("--seed", gen.seed, "Generator seed")->default_val(1);
    gen_cmd->add_option("-o,--out-dir", gen.out_dir, "Directory for input.txt and expected.txt")->required();

    BenchArgs bench;
    CLI::App* bench_cmd = app.add_subcommand("bench", "Sweep programs over memory scenarios under the simulator");
    bench_cmd->add_option("--programs", bench.programs, "Programs to run (default: all workloads)");
    bench_cmd->add_option("--size", bench.sizes, "Override a size, e.g. merge=512");
    bench_cmd->add_option("--scenarios", bench.scenarios, "Subset of unbounded, min_prefetch, demand_lru, demand_fifo");
    bench_cmd->add_option("--bitwire-config", bench.bitwire_config, "YAML config for bit-wire programs");
    bench_cmd->add_option("--batch-config", bench.batch_config, "YAML config for batch programs");
    bench_cmd->add_option("--seed", bench.seed, "Input seed")->default_val(1);
    bench_cmd->add_option("--ratio", bench.ratio, "Footprint over memory limit")->default_val(4);
    bench_cmd->add_option("--lookahead-margin", bench.lookahead_margin,
                          "Derive l per program as margin x page transfer time / compute per instruction");
    bench_cmd->add_option("--workers", bench.workers, "Workers per program")->default_val(1);
    bench_cmd->add_option("-o,--out-dir", bench.out_dir, "Report directory")->default_val("bench-out");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*plan_cmd) {
            do_plan(plan);
        } else if (*run_cmd) {
            do_run(run);
        } else if (*inspect_cmd) {
            bytecode::disassemble(inspect_path, std::cout);
        } else if (*gen_cmd) {
            do_gen(gen);
        } else if (*bench_cmd) {
            do_bench(bench);
        }
    } catch (const std::exception& e) {
        std::cerr << "memplan: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
