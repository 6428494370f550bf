#include "memplan/cli/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "memplan/error.hpp"

namespace memplan::cli {
    namespace {
        /* The planner needs room for the widest instruction. */
        constexpr std::uint64_t min_frames = 4;

        const RunConfig& base_config(const BenchSettings& s, const ProgramSpec& p) {
            return program_driver(p) == bytecode::DriverId::BitWire ? s.bitwire : s.batch;
        }

        double page_transfer_time(const RunConfig& c) {
            return c.simulator.latency_s + static_cast<double>(c.page_bytes()) / c.simulator.bandwidth_bytes_per_s;
        }

        nlohmann::ordered_json config_json(const RunConfig& c) {
            return {
                {"page_shift", c.page_shift},
                {"page_bytes", c.page_bytes()},
                {"lookahead", c.lookahead},
                {"prefetch_frames", c.prefetch_frames},
                {"latency_s", c.simulator.latency_s},
                {"bandwidth_bytes_per_s", c.simulator.bandwidth_bytes_per_s},
                {"and_gate_s", c.cost.and_gate},
                {"xor_gate_s", c.cost.xor_gate},
                {"batch_op_s", c.cost.batch_op},
                {"copy_per_byte_s", c.cost.copy_per_byte},
                {"io_wire_s", c.cost.io_wire},
                {"page_transfer_s", page_transfer_time(c)},
                {"little_law_buffer", scheduling::little_law_buffer(c.simulator.bandwidth_bytes_per_s,
                                                                    c.simulator.latency_s, c.page_bytes())},
            };
        }

        RunConfig with_limit(RunConfig c, std::uint64_t limit, replacement::Policy policy) {
            c.policy = policy;
            for (WorkerConfig& w : c.workers) {
                w.memory_limit = limit;
                w.storage_path.clear();
            }
            return c;
        }

        BenchCell run_cell(const BenchSettings& settings, ProgramSpec spec, Scenario scenario, std::uint64_t footprint,
                           std::uint64_t lookahead, const workloads::GeneratedInputs& inputs) {
            RunConfig cfg = base_config(settings, spec);
            cfg.lookahead = lookahead;
            BenchCell cell;
            cell.program = spec.name;
            cell.n = spec.n;
            cell.workers = spec.worker_count;
            cell.scenario = scenario;
            cell.footprint_pages = footprint;
            if (scenario == Scenario::Unbounded) {
                cfg = with_limit(cfg, 0, replacement::Policy::Min);
            } else {
                auto pages = static_cast<std::uint64_t>(static_cast<double>(footprint) / settings.footprint_ratio);
                if (pages < cfg.prefetch_frames + min_frames) {
                    pages = cfg.prefetch_frames + min_frames;
                    cell.limit_raised = true;
                }
                cell.memory_limit = pages * cfg.page_bytes();
                replacement::Policy policy = scenario == Scenario::MinPrefetch ? replacement::Policy::Min
                    : scenario == Scenario::DemandLru                       ? replacement::Policy::Lru
                                                                            : replacement::Policy::Fifo;
                cfg = with_limit(cfg, cell.memory_limit, policy);
                if (spec.name == "t_rmatmul" && spec.tile == 0) {
                    spec.tile = choose_tile(spec.n, cfg.frames(0), cfg);
                }
            }
            if (spec.name == "t_rmatmul" && spec.tile == 0) {
                spec.tile = choose_tile(spec.n, never, cfg);
            }
            cell.tile = spec.name == "t_rmatmul" ? spec.tile : 0;
            cell.lookahead = scenario == Scenario::MinPrefetch ? cfg.lookahead : 0;

            std::vector<std::string> paths;
            for (WorkerId w = 0; w != spec.worker_count; w++) {
                std::string path = fmt::format("{}/{}.{}.w{}.prog", settings.work_dir, spec.name, scenario_name(scenario), w);
                cell.plans.push_back(plan_program(spec, cfg, w, path));
                paths.push_back(path);
            }
            std::vector<WorkerRun> runs = run_in_process(paths, cfg, inputs.worker_inputs);
            std::string output;
            for (const WorkerRun& r : runs) {
                cell.stats.push_back(r.stats);
                cell.total_virtual_time = std::max(cell.total_virtual_time, r.stats.total_virtual_time);
                output += r.output;
            }
            cell.output_ok = output == inputs.expected_output;
            for (const std::string& p : paths) {
                std::filesystem::remove(p);
            }
            return cell;
        }

        template <typename F>
        std::uint64_t sum_stats(const BenchCell& c, F field) {
            std::uint64_t total = 0;
            for (const engine::ExecStats& s : c.stats) {
                total += field(s);
            }
            return total;
        }
    }

    std::string_view scenario_name(Scenario s) {
        switch (s) {
            case Scenario::Unbounded:
                return "unbounded";
            case Scenario::MinPrefetch:
                return "min_prefetch";
            case Scenario::DemandLru:
                return "demand_lru";
            case Scenario::DemandFifo:
                return "demand_fifo";
        }
        return "?";
    }

    Scenario parse_scenario(std::string_view name) {
        for (Scenario s : all_scenarios) {
            if (scenario_name(s) == name) {
                return s;
            }
        }
        throw SpecError("unknown scenario '" + std::string(name) + "'");
    }

    const BenchCell* BenchReport::find(std::string_view program, Scenario scenario) const {
        for (const BenchCell& c : this->cells) {
            if (c.program == program && c.scenario == scenario) {
                return &c;
            }
        }
        return nullptr;
    }

    BenchReport run_bench(const BenchSettings& settings) {
        BenchReport report;
        report.settings = settings;
        std::filesystem::create_directories(settings.work_dir);
        for (const ProgramSpec& spec : settings.programs) {
            const RunConfig& base = base_config(settings, spec);
            const workloads::GeneratedInputs inputs = program_inputs(spec, settings.seed, base);

            /* The unbounded plan fixes the footprint every bounded scenario is scaled from. */
            BenchCell unbounded = run_cell(settings, spec, Scenario::Unbounded, 0, base.lookahead, inputs);
            std::uint64_t footprint = 0;
            for (const PlanReport& p : unbounded.plans) {
                footprint = std::max(footprint, p.replacement.stats.peak_resident);
            }
            unbounded.footprint_pages = footprint;
            unbounded.ratio = 1.0;
            const double reference = unbounded.total_virtual_time;
            std::uint64_t lookahead = base.lookahead;
            if (settings.lookahead_margin > 0) {
                double per_instruction = 0;
                for (const engine::ExecStats& st : unbounded.stats) {
                    if (st.instructions_executed != 0) {
                        per_instruction = std::max(per_instruction, st.compute_time / static_cast<double>(st.instructions_executed));
                    }
                }
                if (per_instruction > 0) {
                    lookahead = static_cast<std::uint64_t>(
                        std::ceil(settings.lookahead_margin * page_transfer_time(base) / per_instruction));
                }
                lookahead = std::max<std::uint64_t>(lookahead, 1);
            }
            for (Scenario s : settings.scenarios) {
                if (s == Scenario::Unbounded) {
                    report.cells.push_back(unbounded);
                    continue;
                }
                BenchCell cell = run_cell(settings, spec, s, footprint, lookahead, inputs);
                cell.ratio = reference > 0 ? cell.total_virtual_time / reference : 0;
                report.cells.push_back(std::move(cell));
            }
        }
        return report;
    }

    std::string BenchReport::to_csv() const {
        std::ostringstream out;
        out << "program,n,workers,scenario,footprint_pages,memory_limit_bytes,limit_raised,tile,lookahead,swap_ins,swap_outs,"
               "finish_swapin_stalls,stall_time,compute_time,total_virtual_time,ratio,output_ok\n";
        for (const BenchCell& c : this->cells) {
            double stall = 0, compute = 0;
            for (const engine::ExecStats& s : c.stats) {
                stall = std::max(stall, s.stall_time);
                compute = std::max(compute, s.compute_time);
            }
            out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{:.9g},{:.9g},{:.9g},{:.6f},{}\n", c.program, c.n,
                               c.workers, scenario_name(c.scenario), c.footprint_pages, c.memory_limit,
                               c.limit_raised ? 1 : 0, c.tile, c.lookahead,
                               sum_stats(c, [](const engine::ExecStats& s) { return s.swap_ins; }),
                               sum_stats(c, [](const engine::ExecStats& s) { return s.swap_outs; }),
                               sum_stats(c, [](const engine::ExecStats& s) { return s.finish_swapin_stalls; }), stall,
                               compute, c.total_virtual_time, c.ratio, c.output_ok ? 1 : 0);
        }
        return out.str();
    }

    std::string BenchReport::to_json() const {
        nlohmann::ordered_json j;
        j["seed"] = this->settings.seed;
        j["footprint_ratio"] = this->settings.footprint_ratio;
        j["lookahead_margin"] = this->settings.lookahead_margin;
        j["calibration"] = {{"bitwire", config_json(this->settings.bitwire)},
                            {"batch", config_json(this->settings.batch)}};
        j["note"] = "demand_lru and demand_fifo stand in for operating-system swapping";
        nlohmann::ordered_json cells = nlohmann::ordered_json::array();
        for (const BenchCell& c : this->cells) {
            nlohmann::ordered_json cj;
            cj["program"] = c.program;
            cj["n"] = c.n;
            cj["workers"] = c.workers;
            cj["scenario"] = scenario_name(c.scenario);
            cj["footprint_pages"] = c.footprint_pages;
            cj["memory_limit_bytes"] = c.memory_limit;
            cj["limit_raised"] = c.limit_raised;
            if (c.tile != 0) {
                cj["tile"] = c.tile;
            }
            if (c.lookahead != 0) {
                cj["lookahead"] = c.lookahead;
            }
            cj["total_virtual_time"] = c.total_virtual_time;
            cj["ratio"] = c.ratio;
            cj["output_ok"] = c.output_ok;
            nlohmann::ordered_json plans = nlohmann::ordered_json::array();
            for (const PlanReport& p : c.plans) {
                plans.push_back(nlohmann::ordered_json::parse(p.to_json()));
            }
            cj["plans"] = plans;
            nlohmann::ordered_json stats = nlohmann::ordered_json::array();
            for (const engine::ExecStats& s : c.stats) {
                stats.push_back(nlohmann::ordered_json::parse(s.to_json()));
            }
            cj["exec"] = stats;
            cells.push_back(cj);
        }
        j["cells"] = cells;
        return j.dump(2);
    }

    std::string BenchReport::to_ratio_csv() const {
        std::ostringstream out;
        out << "program";
        for (Scenario s : this->settings.scenarios) {
            out << ',' << scenario_name(s);
        }
        out << '\n';
        for (const ProgramSpec& p : this->settings.programs) {
            out << p.name;
            for (Scenario s : this->settings.scenarios) {
                const BenchCell* c = this->find(p.name, s);
                out << fmt::format(",{:.6f}", c ? c->ratio : 0.0);
            }
            out << '\n';
        }
        return out.str();
    }

    std::string gnuplot_script(const std::string& csv_name) {
        std::ostringstream out;
        out << "# Total virtual time normalized by the unbounded scenario.\n"
            << "set datafile separator ','\n"
            << "set terminal pngcairo size 1200,500\n"
            << "set output 'bench.png'\n"
            << "set style data histogram\n"
            << "set style histogram cluster gap 1\n"
            << "set style fill solid border -1\n"
            << "set ylabel 'time / unbounded'\n"
            << "set key top left autotitle columnhead\n"
            << "set xtics rotate by -30\n"
            << "plot for [i=2:*] '" << csv_name << "' using i:xtic(1)\n";
        return out.str();
    }
}
