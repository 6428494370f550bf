/**
 * @file workloads/workloads.hpp
 * @brief Benchmark programs, their input generators and plaintext oracles.
 *
 * Every program reads all of its inputs, computes, then writes all of its
 * outputs. Records for merge, sort and ljoin are 128 bits with the key in
 * the low 32 bits. Batch workloads treat each ciphertext as `dimension`
 * independent instances of the problem.
 */

#ifndef MEMPLAN_WORKLOADS_WORKLOADS_HPP_
#define MEMPLAN_WORKLOADS_WORKLOADS_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "memplan/dsl/context.hpp"

namespace memplan::workloads {
    enum class Workload { Merge, Sort, Ljoin, Mvmul, Binfclayer, Rsum, Rstats, Rmvmul, NRmatmul, TRmatmul };

    constexpr Workload all_workloads[] = {Workload::Merge,  Workload::Sort,   Workload::Ljoin,    Workload::Mvmul,
                                          Workload::Binfclayer, Workload::Rsum, Workload::Rstats, Workload::Rmvmul,
                                          Workload::NRmatmul, Workload::TRmatmul};

    std::string_view name(Workload w);

    /** @throws SpecError for an unknown name. */
    Workload parse_workload(std::string_view name);

    bytecode::DriverId driver_for(Workload w);

    bool supports_multiple_workers(Workload w);

    struct WorkloadSpec {
        Workload kind = Workload::Merge;
        std::uint64_t n = 0;
        WorkerId worker_count = 1;
        /** @brief Tile side for t_rmatmul; 0 picks n / 4. */
        std::uint64_t tile = 0;
    };

    /** @throws SpecError unless n and worker_count are powers of two the workload can use. */
    void validate(const WorkloadSpec& spec);

    std::uint64_t effective_tile(const WorkloadSpec& spec);

    dsl::ProgramFn build_workload(const WorkloadSpec& spec);

    struct GeneratedInputs {
        /** @brief One input file's contents per worker. */
        std::vector<std::string> worker_inputs;
        /** @brief Expected concatenation of all workers' outputs, in worker order. */
        std::string expected_output;
    };

    /**
     * @param dimension Slots per ciphertext for batch workloads; ignored
     * otherwise.
     */
    GeneratedInputs generate_inputs(const WorkloadSpec& spec, std::uint64_t seed, std::uint32_t dimension);
}

#endif
