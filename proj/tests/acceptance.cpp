// Runs the ten acceptance criteria and prints one PASS/FAIL line for each.

#include <chrono>
#include <functional>
#include <iostream>
#include <map>

#include <fmt/format.h>

#include "harness.hpp"
#include "oracles.hpp"
#include "memplan/cli/bench.hpp"
#include "memplan/replacement/trace.hpp"

using namespace memplan;
using memplan::testing::Rng;
using memplan::testing::ScratchDir;
using workloads::Workload;

namespace {
    struct Verdict {
        bool pass = true;
        std::string detail;
    };

    using Clock = std::chrono::steady_clock;

    double seconds_since(Clock::time_point t) {
        return std::chrono::duration<double>(Clock::now() - t).count();
    }

    std::vector<std::vector<replacement::TraceAccess>> trace_suite() {
        Rng rng(20240601);
        std::vector<std::vector<replacement::TraceAccess>> out;
        for (int i = 0; i < 500; i++) {
            out.push_back(memplan::testing::random_trace(rng, 24, 8, i % 4 == 0 ? 0.0 : 0.5));
        }
        return out;
    }

    std::uint64_t trace_frames(std::size_t i) {
        return 1 + i % 4;
    }

    Verdict min_exactness() {
        const auto start = Clock::now();
        const auto suite = trace_suite();
        std::uint64_t mismatches = 0;
        for (std::size_t i = 0; i != suite.size(); i++) {
            auto planned = replacement::plan_trace(suite[i], trace_frames(i), replacement::Policy::Min);
            auto best = replacement::brute_force_min(suite[i], trace_frames(i));
            mismatches += planned.swap_ins != best.min_swap_ins;
        }
        const std::vector<PageNumber> classic = {1, 2, 3, 4, 1, 2, 5, 1, 2, 3, 4, 5};
        const std::uint64_t classic_swaps =
            replacement::plan_trace(replacement::reads(classic), 3, replacement::Policy::Min).swap_ins;
        const double elapsed = seconds_since(start);
        return {mismatches == 0 && classic_swaps == 7 && elapsed < 60,
                fmt::format("{} traces, {} mismatches, classic trace {} swap-ins, {:.1f}s", suite.size(), mismatches,
                            classic_swaps, elapsed)};
    }

    Verdict total_swap_bound() {
        const auto suite = trace_suite();
        std::uint64_t violations = 0;
        double worst = 0;
        for (std::size_t i = 0; i != suite.size(); i++) {
            auto planned = replacement::plan_trace(suite[i], trace_frames(i), replacement::Policy::Min);
            auto best = replacement::brute_force_min(suite[i], trace_frames(i));
            const std::uint64_t total = planned.swap_ins + planned.swap_outs;
            violations += total > 2 * best.min_total_swaps;
            if (best.min_total_swaps > 0) {
                worst = std::max(worst, static_cast<double>(total) / static_cast<double>(best.min_total_swaps));
            }
        }
        return {violations == 0, fmt::format("{} traces, {} violations, worst ratio {:.3f}", suite.size(), violations, worst)};
    }

    struct SweepResult {
        std::uint64_t runs = 0;
        std::uint64_t wrong_output = 0;
        std::uint64_t bad_residency = 0;
        double seconds = 0;
    };

    SweepResult correctness_sweep() {
        const auto start = Clock::now();
        SweepResult r;
        for (Workload w : workloads::all_workloads) {
            ScratchDir dir;
            cli::RunConfig c = memplan::testing::small_config(workloads::driver_for(w));
            cli::ProgramSpec spec{std::string(workloads::name(w)), memplan::testing::small_size(w)};
            const std::uint64_t footprint = memplan::testing::footprint_pages(spec, c, dir);
            for (std::uint64_t divisor : {0, 2, 4, 8}) {
                const std::uint64_t pages = divisor == 0 ? 0 : memplan::testing::fraction_pages(footprint, divisor, c);
                auto out = memplan::testing::plan_and_run(spec, c, pages, dir);
                r.runs++;
                if (!out.output_ok()) {
                    r.wrong_output++;
                    std::cerr << "  wrong output: " << spec.name << " at 1/" << divisor << '\n';
                }
                if (!out.residency_ok()) {
                    r.bad_residency++;
                    std::cerr << "  residency: " << spec.name << " at 1/" << divisor << '\n';
                }
            }
        }
        r.seconds = seconds_since(start);
        return r;
    }

    cli::BenchReport calibrated_bench(const std::string& work_dir) {
        cli::BenchSettings s;
        const std::map<std::string, std::uint64_t> sizes = {
            {"merge", 1024}, {"sort", 512},   {"ljoin", 64},  {"mvmul", 64},     {"binfclayer", 512},
            {"rsum", 256},   {"rstats", 256}, {"rmvmul", 16}, {"n_rmatmul", 16}, {"t_rmatmul", 16},
        };
        for (Workload w : workloads::all_workloads) {
            const std::string name(workloads::name(w));
            s.programs.push_back({name, sizes.at(name)});
        }
        s.scenarios = {cli::Scenario::Unbounded, cli::Scenario::MinPrefetch, cli::Scenario::DemandLru};
        s.seed = 1;
        s.footprint_ratio = 4;
        s.lookahead_margin = 2;
        s.bitwire = cli::load_config(std::string(MEMPLAN_CONFIG_DIR) + "/calibrated-bitwire.yaml");
        s.batch = cli::load_config(std::string(MEMPLAN_CONFIG_DIR) + "/calibrated-batch.yaml");
        s.work_dir = work_dir;
        return cli::run_bench(s);
    }

    Verdict near_in_memory(const cli::BenchReport& report) {
        int within = 0, total = 0;
        std::string slow;
        bool outputs = true;
        for (const cli::BenchCell& c : report.cells) {
            outputs = outputs && c.output_ok;
            if (c.scenario != cli::Scenario::MinPrefetch) {
                continue;
            }
            total++;
            if (c.ratio <= 1.15) {
                within++;
            } else {
                slow += fmt::format(" {}={:.2f}", c.program, c.ratio);
            }
        }
        return {within >= 7 && outputs,
                fmt::format("{}/{} workloads within 1.15x of unbounded; slower:{}", within, total, slow.empty() ? " none" : slow)};
    }

    Verdict baseline_dominance(const cli::BenchReport& report) {
        int dominated = 0, twice = 0, total = 0;
        for (Workload w : workloads::all_workloads) {
            const std::string name(workloads::name(w));
            const cli::BenchCell* min = report.find(name, cli::Scenario::MinPrefetch);
            const cli::BenchCell* lru = report.find(name, cli::Scenario::DemandLru);
            if (min == nullptr || lru == nullptr) {
                continue;
            }
            total++;
            dominated += min->total_virtual_time <= lru->total_virtual_time;
            twice += 2 * min->total_virtual_time <= lru->total_virtual_time;
        }
        return {total == 10 && dominated == 10 && twice >= 5,
                fmt::format("min_prefetch <= demand_lru on {}/{}, at least 2x better on {}", dominated, total, twice)};
    }

    Verdict zero_stall(const cli::BenchReport& report) {
        std::string detail;
        bool pass = true;
        for (const char* name : {"rsum", "ljoin"}) {
            const cli::BenchCell* c = report.find(name, cli::Scenario::MinPrefetch);
            std::uint64_t stalls = 0, swap_ins = 0;
            if (c != nullptr) {
                for (const engine::ExecStats& st : c->stats) {
                    stalls += st.finish_swapin_stalls;
                    swap_ins += st.swap_ins;
                }
            }
            pass = pass && c != nullptr && stalls == 0;
            detail += fmt::format("{}: {} stalls over {} swap-ins; ", name, stalls, swap_ins);
        }
        return {pass, detail};
    }

    Verdict distributed_equivalence() {
        bool pass = true;
        std::string detail;
        for (const char* name : {"merge", "rsum"}) {
            ScratchDir dir;
            cli::ProgramSpec single{name, 256};
            cli::RunConfig c = memplan::testing::small_config(cli::program_driver(single));
            auto reference = memplan::testing::plan_and_run(single, c, 0, dir);
            pass = pass && reference.output_ok();
            for (WorkerId workers : {2u, 4u}) {
                cli::ProgramSpec spec{name, 256, workers};
                cli::RunConfig wc = c;
                wc.workers.assign(workers, cli::WorkerConfig{});
                const std::uint64_t footprint = memplan::testing::footprint_pages(spec, wc, dir);
                for (std::uint64_t divisor : {0, 4}) {
                    const std::uint64_t pages =
                        divisor == 0 ? 0 : memplan::testing::fraction_pages(footprint, divisor, wc);
                    auto out = memplan::testing::plan_and_run(spec, wc, pages, dir);
                    const bool same = out.output == reference.output;
                    pass = pass && same && out.residency_ok();
                    if (!same || !out.residency_ok()) {
                        detail += fmt::format("{} W={} 1/{} differs; ", name, workers, divisor);
                    }
                }
            }
        }
        return {pass, detail.empty() ? "merge and rsum at W=2,4 match W=1; all worker plans within T" : detail};
    }

    Verdict determinism() {
        bool pass = true;
        std::string detail;
        for (const char* name : {"merge", "ljoin", "rsum", "t_rmatmul"}) {
            cli::ProgramSpec spec{name, std::string(name) == "t_rmatmul" ? 16u : 64u};
            cli::RunConfig c = memplan::testing::small_config(cli::program_driver(spec));
            ScratchDir a, b;
            const std::uint64_t footprint = memplan::testing::footprint_pages(spec, c, a);
            const std::uint64_t pages = memplan::testing::fraction_pages(footprint, 4, c);
            auto x = memplan::testing::plan_and_run(spec, c, pages, a, 11);
            auto y = memplan::testing::plan_and_run(spec, c, pages, b, 11);
            bool same = x.output == y.output && x.programs.size() == y.programs.size();
            for (std::size_t w = 0; same && w != x.programs.size(); w++) {
                same = memplan::testing::read_file(x.programs[w]) == memplan::testing::read_file(y.programs[w])
                    && x.stats[w].to_json() == y.stats[w].to_json();
            }
            pass = pass && same;
            detail += fmt::format("{}: {}; ", name, same ? "identical" : "DIFFERS");
        }
        return {pass, detail};
    }

    Verdict driver_soundness() {
        Rng rng(777);
        std::uint64_t batch_bad = 0, int_bad = 0;
        dsl::ProgramOptions bo;
        bo.driver = bytecode::DriverId::LeveledBatch;
        bo.page_shift = 11;
        bo.batch.dimension = 4;
        bo.batch.relin_base = 256;
        bo.batch.unrelin_base = 384;
        engine::EngineOptions eo;
        eo.batch = bo.batch;
        for (int i = 0; i < 1000; i++) {
            ScratchDir dir;
            auto dag = memplan::testing::random_batch_dag(rng, 2, 4, 14);
            auto values = memplan::testing::evaluate_batch(dag, 2);
            std::vector<std::pair<std::uint8_t, bool>> observed;
            auto run = memplan::testing::run_program(memplan::testing::batch_program(dag, &observed), bo,
                                                     memplan::testing::batch_input_text(dag), dir, never, {}, eo);
            bool ok = run.output == memplan::testing::batch_output_text(dag, values) && observed.size() == values.size();
            for (std::size_t k = 0; ok && k != values.size(); k++) {
                ok = observed[k].first == values[k].level && observed[k].second == values[k].relinearized;
            }
            batch_bad += !ok;
        }
        dsl::ProgramOptions io;
        io.page_shift = 8;
        for (int i = 0; i < 1000; i++) {
            ScratchDir dir;
            auto dag = memplan::testing::random_int_dag(rng, 24);
            auto run = memplan::testing::run_program(memplan::testing::int_program(dag), io,
                                                     memplan::testing::int_input_text(dag), dir);
            int_bad += run.output != memplan::testing::int_output_text(dag, memplan::testing::evaluate_int(dag));
        }
        return {batch_bad == 0 && int_bad == 0,
                fmt::format("1000 batch DAGs ({} mismatches), 1000 integer DAGs ({} mismatches)", batch_bad, int_bad)};
    }

    bool report(int number, const std::function<Verdict()>& check) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        std::cout << "criterion " << number << ": " << (v.pass ? "PASS" : "FAIL") << " - " << v.detail << std::endl;
        return v.pass;
    }
}

int main() {
    bool all = true;
    all &= report(1, min_exactness);
    all &= report(2, total_swap_bound);

    SweepResult sweep;
    std::string sweep_error;
    try {
        sweep = correctness_sweep();
    } catch (const std::exception& e) {
        sweep_error = e.what();
    }
    all &= report(3, [&] {
        if (!sweep_error.empty()) {
            return Verdict{false, "error: " + sweep_error};
        }
        return Verdict{sweep.wrong_output == 0 && sweep.seconds < 600,
                       fmt::format("{} runs, {} wrong outputs, {:.0f}s", sweep.runs, sweep.wrong_output, sweep.seconds)};
    });
    all &= report(4, [&] {
        return Verdict{sweep_error.empty() && sweep.bad_residency == 0,
                       fmt::format("{} plans, {} over their frame budget", sweep.runs, sweep.bad_residency)};
    });

    ScratchDir bench_dir;
    cli::BenchReport bench;
    std::string bench_error;
    try {
        bench = calibrated_bench(bench_dir.file("work"));
        std::cout << bench.to_ratio_csv();
    } catch (const std::exception& e) {
        bench_error = e.what();
    }
    auto from_bench = [&](const std::function<Verdict(const cli::BenchReport&)>& f) {
        return [&, f] { return bench_error.empty() ? f(bench) : Verdict{false, "error: " + bench_error}; };
    };
    all &= report(5, from_bench(near_in_memory));
    all &= report(6, from_bench(baseline_dominance));
    all &= report(7, from_bench(zero_stall));
    all &= report(8, distributed_equivalence);
    all &= report(9, determinism);
    all &= report(10, driver_soundness);
    return all ? 0 : 1;
}
