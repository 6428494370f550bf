#include "memplan/cli/pipeline.hpp"

#include <sys/resource.h>

#include <chrono>
#include <random>
#include <filesystem>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "memplan/dsl/integer.hpp"
#include "memplan/engine/channel.hpp"
#include "memplan/error.hpp"
#include "memplan/placement/run.hpp"

namespace memplan::cli {
    namespace {
        constexpr const char* millionaire_name = "millionaire";

        void millionaire_program(const dsl::ProgramOptions&) {
            dsl::Integer a(32);
            a.mark_input(dsl::Party::Garbler);
            dsl::Integer b(32);
            b.mark_input(dsl::Party::Evaluator);
            dsl::Integer richer = a >= b;
            richer.mark_output();
        }

        long maxrss_kib() {
            rusage usage{};
            getrusage(RUSAGE_SELF, &usage);
            return usage.ru_maxrss;
        }
    }

    std::vector<std::string> program_names() {
        std::vector<std::string> names;
        for (workloads::Workload w : workloads::all_workloads) {
            names.emplace_back(workloads::name(w));
        }
        names.emplace_back(millionaire_name);
        return names;
    }

    std::optional<workloads::WorkloadSpec> as_workload(const ProgramSpec& spec) {
        if (spec.name == millionaire_name) {
            return std::nullopt;
        }
        workloads::WorkloadSpec w{workloads::parse_workload(spec.name), spec.n, spec.worker_count, spec.tile};
        workloads::validate(w);
        return w;
    }

    bytecode::DriverId program_driver(const ProgramSpec& spec) {
        auto w = as_workload(spec);
        return w ? workloads::driver_for(w->kind) : bytecode::DriverId::BitWire;
    }

    dsl::ProgramFn resolve_program(const ProgramSpec& spec) {
        auto w = as_workload(spec);
        if (!w) {
            if (spec.worker_count != 1) {
                throw SpecError("millionaire runs on a single worker only");
            }
            return millionaire_program;
        }
        return workloads::build_workload(*w);
    }

    dsl::ProgramOptions program_options(const ProgramSpec& spec, const RunConfig& config, WorkerId worker) {
        if (program_driver(spec) != config.driver) {
            throw ConfigError(spec.name + " needs the " + (program_driver(spec) == bytecode::DriverId::BitWire ? "bitwire" : "batch")
                              + " driver");
        }
        dsl::ProgramOptions o;
        o.worker_id = worker;
        o.worker_count = spec.worker_count;
        o.problem_size = spec.n;
        o.driver = config.driver;
        o.page_shift = config.page_shift;
        o.batch = config.batch;
        auto w = as_workload(spec);
        o.tile = w ? workloads::effective_tile(*w) : 0;
        return o;
    }

    std::uint64_t choose_tile(std::uint64_t n, std::uint64_t frames, const RunConfig& config) {
        /* Input tiles hold relinearized ciphertexts, the accumulator tile unrelinearized ones. */
        const std::uint64_t page = std::uint64_t(1) << config.page_shift;
        const std::uint64_t per_page_in = std::max<std::uint64_t>(1, page / config.batch.size_of(config.batch.max_level, true));
        const std::uint64_t per_page_acc = std::max<std::uint64_t>(1, page / config.batch.size_of(config.batch.max_level, false));
        std::uint64_t best = 1;
        for (std::uint64_t t = 1; t <= n; t *= 2) {
            std::uint64_t pages = 2 * ((t * t + per_page_in - 1) / per_page_in) + (t * t + per_page_acc - 1) / per_page_acc;
            if (pages <= frames) {
                best = t;
            }
        }
        return best;
    }

    workloads::GeneratedInputs program_inputs(const ProgramSpec& spec, std::uint64_t seed, const RunConfig& config) {
        auto w = as_workload(spec);
        if (w) {
            return workloads::generate_inputs(*w, seed, config.batch.dimension);
        }
        std::mt19937_64 rng(seed);
        const std::uint32_t a = static_cast<std::uint32_t>(rng());
        const std::uint32_t b = static_cast<std::uint32_t>(rng());
        return {{std::to_string(a) + "\n" + std::to_string(b) + "\n"}, a >= b ? "1\n" : "0\n"};
    }

    std::string PlanReport::to_json() const {
        nlohmann::ordered_json j;
        j["placement"] = {
            {"virtual_instructions", this->virtual_instructions},
            {"pages_ever_allocated", this->placement.pages_ever_allocated},
            {"peak_live_pages", this->placement.peak_live_pages},
            {"peak_live_units", this->placement.peak_live_units},
            {"allocations", this->placement.allocations},
        };
        j["replacement"] = nlohmann::ordered_json::parse(replacement::plan_stats_json(this->replacement));
        if (this->scheduling) {
            const scheduling::SchedulerStats& s = *this->scheduling;
            j["scheduling"] = {
                {"swap_ins", s.swap_ins},
                {"swap_outs", s.swap_outs},
                {"hoisted", s.hoisted},
                {"direct_swap_outs", s.direct_swap_outs},
                {"forced_finishes", s.forced_finishes},
                {"output_instructions", s.output_instructions},
            };
        } else {
            j["scheduling"] = nullptr;
        }
        if (this->frames == never) {
            j["frames"] = "unbounded";
        } else {
            j["frames"] = this->frames;
        }
        j["output_bytes"] = this->output_bytes;
        j["plan_seconds"] = this->plan_seconds;
        j["maxrss_kib"] = this->maxrss_kib;
        return j.dump(2);
    }

    PlanReport plan_program(const ProgramSpec& spec, const RunConfig& config, WorkerId worker,
                            const std::string& output_path, bool keep_intermediates) {
        const auto start = std::chrono::steady_clock::now();
        PlanReport report;
        const dsl::ProgramOptions opts = program_options(spec, config, worker);
        const std::string virt = output_path + ".virt";
        const std::string phys = output_path + ".phys";
        const std::string ann = output_path + ".ann";

        placement::PlacementResult placed = placement::run_placement(resolve_program(spec), opts, virt);
        report.placement = placed.stats;
        report.virtual_instructions = placed.instructions;

        const std::uint64_t frames = config.frames(worker);
        const bool bounded = frames != never;
        const bool demand = config.policy != replacement::Policy::Min;
        const bool prefetch = bounded && !demand && config.prefetch_frames > 0;
        const std::string replaced = prefetch ? phys : output_path;
        if (demand) {
            if (!bounded) {
                throw ConfigError("demand-paging policies need a memory limit");
            }
            report.frames = frames + config.prefetch_frames;
            report.replacement = replacement::plan_replacement_baseline(virt, replaced, report.frames, config.policy);
        } else {
            report.frames = frames;
            replacement::annotate(virt, ann);
            report.replacement = replacement::plan_replacement(virt, ann, replaced, {frames, replacement::Policy::Min});
        }
        if (prefetch) {
            report.scheduling = scheduling::schedule(phys, output_path, {config.lookahead, config.prefetch_frames});
        }
        if (!keep_intermediates) {
            for (const std::string& p : {virt, phys, ann}) {
                std::filesystem::remove(p);
            }
        }
        report.output_bytes = std::filesystem::file_size(output_path);
        report.plan_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.maxrss_kib = maxrss_kib();
        return report;
    }

    engine::ExecStats run_worker(const std::string& program_path, const RunConfig& config, WorkerId worker,
                                 engine::Channel* channel, std::istream& input, std::ostream& output) {
        const WorkerConfig& w = config.worker(worker);
        engine::EngineOptions opts = config.engine_options();
        if (w.storage_path.empty()) {
            engine::SimulatedStorage storage(config.simulator);
            return engine::execute(program_path, opts, storage, channel, input, output);
        }
        engine::FileStorage storage(w.storage_path);
        return engine::execute(program_path, opts, storage, channel, input, output);
    }

    std::vector<WorkerRun> run_in_process(const std::vector<std::string>& program_paths, const RunConfig& config,
                                          const std::vector<std::string>& inputs) {
        const auto count = static_cast<WorkerId>(program_paths.size());
        if (inputs.size() != program_paths.size()) {
            throw InputError("need one input per worker");
        }
        std::vector<WorkerRun> runs(count);
        if (count == 1) {
            std::istringstream in(inputs[0]);
            std::ostringstream out;
            runs[0].stats = run_worker(program_paths[0], config, 0, nullptr, in, out);
            runs[0].output = out.str();
            return runs;
        }
        engine::InProcessHub hub(count);
        std::vector<std::exception_ptr> errors(count);
        std::vector<std::thread> threads;
        for (WorkerId w = 0; w != count; w++) {
            threads.emplace_back([&, w, channel = hub.endpoint(w)] {
                try {
                    std::istringstream in(inputs[w]);
                    std::ostringstream out;
                    runs[w].stats = run_worker(program_paths[w], config, w, channel.get(), in, out);
                    runs[w].output = out.str();
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (std::thread& t : threads) {
            t.join();
        }
        for (const std::exception_ptr& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
        return runs;
    }

    std::string worker_path(const std::string& pattern, WorkerId worker, WorkerId worker_count) {
        const std::string marker = "{worker}";
        std::size_t at = pattern.find(marker);
        if (at != std::string::npos) {
            std::string out = pattern;
            return out.replace(at, marker.size(), std::to_string(worker));
        }
        if (worker_count == 1) {
            return pattern;
        }
        return pattern + ".w" + std::to_string(worker);
    }
}
