#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "harness.hpp"
#include "json.hpp"
#include "memplan/cli/bench.hpp"
#include "memplan/error.hpp"

using namespace memplan;
using namespace memplan::cli;
using memplan::testing::read_file;
using memplan::testing::ScratchDir;

namespace {
    int memplan_cli(const std::string& args) {
        const std::string cmd = std::string(MEMPLAN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
        return std::system(cmd.c_str());
    }
}

TEST_CASE("worker paths") {
    CHECK(worker_path("out.prog", 0, 1) == "out.prog");
    CHECK(worker_path("out.prog", 2, 4) == "out.prog.w2");
    CHECK(worker_path("w{worker}.prog", 3, 4) == "w3.prog");
    CHECK(worker_path("w{worker}.prog", 0, 1) == "w0.prog");
}

TEST_CASE("config text round trip") {
    RunConfig c = memplan::testing::small_config(bytecode::DriverId::LeveledBatch);
    c.workers = {WorkerConfig{1 << 20, "/tmp/a", "127.0.0.1:9000"}, WorkerConfig{2 << 20, "/tmp/b", "127.0.0.1:9001"}};
    c.policy = replacement::Policy::Lru;
    const std::string text = dump_config(c);
    RunConfig back = parse_config(text);
    CHECK(dump_config(back) == text);
    CHECK(back.workers.size() == 2);
    CHECK(back.frames(1) == (2 << 20) / c.page_bytes() - c.prefetch_frames);
    CHECK(back.policy == replacement::Policy::Lru);

    CHECK_THROWS_AS(parse_config("driver: quantum\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("page_shift: [1, 2]\n"), ConfigError);
}

TEST_CASE("planning is deterministic and honours the memory limit") {
    ScratchDir dir;
    RunConfig c = memplan::testing::small_config(bytecode::DriverId::BitWire);
    ProgramSpec millionaire{"millionaire", 1};
    PlanReport r = plan_program(millionaire, c, 0, dir.file("m.prog"));
    CHECK(r.replacement.stats.swap_ins == 0);
    CHECK(r.replacement.stats.swap_outs == 0);
    CHECK(r.frames == never);
    auto doc = nlohmann::json::parse(r.to_json());
    for (const char* key : {"placement", "replacement", "frames", "output_bytes", "plan_seconds", "maxrss_kib"}) {
        CHECK(doc.contains(key));
    }

    RunConfig b = memplan::testing::small_config(bytecode::DriverId::LeveledBatch);
    ProgramSpec rsum{"rsum", 256};
    const std::uint64_t footprint = memplan::testing::footprint_pages(rsum, b, dir);
    b.workers = {WorkerConfig{memplan::testing::fraction_pages(footprint, 2, b) * b.page_bytes()}};
    PlanReport first = plan_program(rsum, b, 0, dir.file("a.prog"));
    PlanReport second = plan_program(rsum, b, 0, dir.file("b.prog"));
    CHECK(first.replacement.stats.swap_ins > 0);
    CHECK(first.scheduling.has_value());
    CHECK(read_file(dir.file("a.prog")) == read_file(dir.file("b.prog")));

    auto inputs = program_inputs(rsum, 3, b);
    auto one = run_in_process({dir.file("a.prog")}, b, inputs.worker_inputs);
    auto two = run_in_process({dir.file("a.prog")}, b, inputs.worker_inputs);
    CHECK(one[0].output == inputs.expected_output);
    CHECK(one[0].stats.to_json() == two[0].stats.to_json());
}

TEST_CASE("unknown programs are rejected") {
    CHECK_THROWS_AS(resolve_program({"nonsense", 4}), SpecError);
    CHECK(program_driver({"millionaire", 1}) == bytecode::DriverId::BitWire);
    CHECK(program_driver({"rsum", 4}) == bytecode::DriverId::LeveledBatch);
}

TEST_CASE("command-line binary") {
    ScratchDir dir;
    const std::string d = dir.path();
    CHECK(memplan_cli("") != 0);
    CHECK(memplan_cli("plan --program merge -n 16 -o " + d + "/m.prog --stats " + d + "/plan.json") == 0);
    CHECK(memplan_cli("gen-inputs --program merge -n 16 --seed 4 -o " + d) == 0);
    memplan::testing::write_file(d + "/c.yaml", dump_config(default_config(bytecode::DriverId::BitWire)));
    CHECK(memplan_cli("run -c " + d + "/c.yaml -p " + d + "/m.prog -i " + d + "/input.txt -o " + d
                      + "/out.txt --stats " + d + "/run.json")
          == 0);
    CHECK(read_file(d + "/out.txt") == read_file(d + "/expected.txt"));
    CHECK(nlohmann::json::parse(read_file(d + "/run.json")).contains("total_virtual_time"));
    CHECK(memplan_cli("run -c " + d + "/c.yaml -p " + d + "/m.prog -i " + d + "/missing.txt") != 0);
    CHECK(memplan_cli("inspect " + d + "/m.prog") == 0);
    CHECK(memplan_cli("inspect " + d + "/input.txt") != 0);
}

TEST_CASE("bench reports repeat exactly") {
    ScratchDir dir;
    const std::string d = dir.path();
    const std::string args =
        "bench --programs merge rsum --size merge=64 rsum=64 --scenarios unbounded min_prefetch demand_lru --seed 2 -o ";
    REQUIRE(memplan_cli(args + d + "/one") == 0);
    REQUIRE(memplan_cli(args + d + "/two") == 0);
    const std::string csv = read_file(d + "/one/results.csv");
    CHECK(csv == read_file(d + "/two/results.csv"));
    CHECK(read_file(d + "/one/ratios.csv") == read_file(d + "/two/ratios.csv"));
    CHECK(csv.find("merge") != std::string::npos);
    CHECK(csv.find("demand_lru") != std::string::npos);
    CHECK_FALSE(read_file(d + "/one/bench.gp").empty());
    auto report = nlohmann::json::parse(read_file(d + "/one/report.json"));
    CHECK(report.is_object());
}
