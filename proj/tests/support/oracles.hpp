/**
 * @file oracles.hpp
 * @brief Test-side reference models, written without the library's
 * planner, builder or engine code: page-replacement simulators, an
 * exhaustive replacement search, and random expression generators with
 * plaintext evaluators for both dialects.
 */
#ifndef MEMPLAN_TESTS_ORACLES_HPP_
#define MEMPLAN_TESTS_ORACLES_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "memplan/dsl/context.hpp"
#include "memplan/replacement/trace.hpp"

namespace memplan::testing {
    using Rng = std::mt19937_64;

    inline std::uint64_t draw(Rng& rng, std::uint64_t lo, std::uint64_t hi) {
        return lo + rng() % (hi - lo + 1);
    }

    /*
     * Page replacement over traces whose pages all start in storage: every
     * access to a non-resident page is one swap-in.
     */
    std::uint64_t lru_faults(const std::vector<std::uint64_t>& pages, std::uint64_t frames);
    std::uint64_t fifo_faults(const std::vector<std::uint64_t>& pages, std::uint64_t frames);

    struct ExhaustiveResult {
        std::uint64_t swap_ins;
        /** @brief Swap-ins plus write-backs of dirty pages that are accessed again. */
        std::uint64_t total_swaps;
    };
    /** @brief Memoized search over every eviction choice. */
    ExhaustiveResult exhaustive_min(const std::vector<replacement::TraceAccess>& trace, std::uint64_t frames);

    /** @brief Random trace within the brute-force bounds. */
    std::vector<replacement::TraceAccess> random_trace(Rng& rng, std::size_t max_len, std::uint64_t max_pages,
                                                       double write_fraction);

    /* Leveled-batch expression DAGs. */
    struct BatchNode {
        enum class Op { Input, Add, MulNoRelin, Relin, AddPlain, MulPlain } op;
        int a = -1;
        int b = -1;
        std::int64_t constant = 0;
    };
    struct BatchValue {
        std::uint8_t level;
        bool relinearized;
        std::vector<std::int64_t> slots;
    };
    struct BatchDag {
        std::vector<BatchNode> nodes;
        std::vector<int> outputs;
        /** @brief Slot values of each Input node, in node order. */
        std::vector<std::vector<std::int64_t>> inputs;
        unsigned slots = 0;
    };
    BatchDag random_batch_dag(Rng& rng, unsigned max_level, unsigned slots, std::size_t nodes);
    /** @brief Evaluates each node recursively from the level rules; throws std::logic_error on a rule violation. */
    std::vector<BatchValue> evaluate_batch(const BatchDag& dag, unsigned max_level);
    /** @brief Input file text for @p dag in the engine's row format. */
    std::string batch_input_text(const BatchDag& dag);
    std::string batch_output_text(const BatchDag& dag, const std::vector<BatchValue>& values);
    /**
     * @brief Builder program for @p dag. The level and relinearization of
     * every node as seen by the builder are appended to @p observed.
     */
    dsl::ProgramFn batch_program(const BatchDag& dag, std::vector<std::pair<std::uint8_t, bool>>* observed);

    /* Bit-wire integer expression DAGs, widths 1..64. */
    struct IntNode {
        enum class Op {
            Input, Constant, Add, Sub, And, Xor, Or, Not, Shl, Shr, Ge, Eq, Mux, Increment, Multiply, ZeroExtend,
            Popcount
        } op;
        std::uint16_t width = 0;
        int a = -1;
        int b = -1;
        int c = -1;
        /** @brief Constant value, shift amount, or multiplier bit count. */
        std::uint64_t k = 0;
    };
    struct IntDag {
        std::vector<IntNode> nodes;
        std::vector<int> outputs;
        std::vector<std::uint64_t> inputs;
    };
    IntDag random_int_dag(Rng& rng, std::size_t nodes);
    std::vector<std::uint64_t> evaluate_int(const IntDag& dag);
    std::string int_input_text(const IntDag& dag);
    std::string int_output_text(const IntDag& dag, const std::vector<std::uint64_t>& values);
    dsl::ProgramFn int_program(const IntDag& dag);
}

#endif
