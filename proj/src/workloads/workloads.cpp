#include "memplan/workloads/workloads.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "memplan/dsl/batch.hpp"
#include "memplan/dsl/integer.hpp"
#include "memplan/dsl/sharded_array.hpp"
#include "memplan/error.hpp"

namespace memplan::workloads {
    using dsl::Batch;
    using dsl::Integer;
    using dsl::Party;

    namespace {
        constexpr std::uint16_t record_bits = 128;
        constexpr std::uint16_t key_bits = 32;

        struct NameEntry {
            Workload kind;
            std::string_view text;
        };

        constexpr NameEntry names[] = {
            {Workload::Merge, "merge"},   {Workload::Sort, "sort"},       {Workload::Ljoin, "ljoin"},
            {Workload::Mvmul, "mvmul"},   {Workload::Binfclayer, "binfclayer"}, {Workload::Rsum, "rsum"},
            {Workload::Rstats, "rstats"}, {Workload::Rmvmul, "rmvmul"},   {Workload::NRmatmul, "n_rmatmul"},
            {Workload::TRmatmul, "t_rmatmul"},
        };

        std::uint16_t dimension() {
            return static_cast<std::uint16_t>(dsl::BuilderContext::current().options().batch.dimension);
        }

        Integer read_record(Party party) {
            Integer r(record_bits);
            r.mark_input(party);
            return r;
        }

        /*
         * One stage of a bitonic network over a sharded array. Pairs closer
         * than the shard size are compared locally; farther pairs are
         * handled by swapping whole shards with the partner worker, each
         * side keeping its half of the compare-and-swap.
         */
        void bitonic_stage(dsl::ShardedArray<Integer>& xs, std::uint64_t k, std::uint64_t j, bool merge_only) {
            std::uint64_t local = xs.local_size();
            auto ascending = [&](std::uint64_t global) { return merge_only || (global & k) == 0; };
            if (j < local) {
                for (std::uint64_t i = 0; i != local; i++) {
                    std::uint64_t l = i ^ j;
                    if (l > i) {
                        dsl::compare_swap(xs[i], xs[l], 0, key_bits, ascending(xs.to_global(i)));
                    }
                }
                return;
            }
            const dsl::ProgramOptions& opts = dsl::BuilderContext::current().options();
            WorkerId partner = opts.worker_id ^ static_cast<WorkerId>(j / local);
            bool lower = opts.worker_id < partner;
            std::vector<Integer> theirs;
            theirs.reserve(local);
            for (std::uint64_t i = 0; i != local; i++) {
                theirs.emplace_back(record_bits);
            }
            for (std::uint64_t i = 0; i != local; i++) {
                dsl::send(xs[i], partner);
                dsl::receive(theirs[i], partner);
            }
            dsl::barrier();
            for (std::uint64_t i = 0; i != local; i++) {
                const Integer& a = lower ? xs[i] : theirs[i];
                const Integer& b = lower ? theirs[i] : xs[i];
                Integer a_ge_b = a.slice(0, key_bits) >= b.slice(0, key_bits);
                bool take_low = ascending(xs.to_global(i)) == lower;
                Integer kept = take_low ? mux(a_ge_b, b, a) : mux(a_ge_b, a, b);
                xs[i] = std::move(kept);
                theirs[i] = Integer();
            }
        }

        void output_all(dsl::ShardedArray<Integer>& xs) {
            for (Integer& x : xs.local()) {
                x.mark_output();
            }
        }

        /* Global sequence is A followed by B reversed, which is bitonic when both halves are sorted. */
        void merge_program(const dsl::ProgramOptions& opts) {
            std::uint64_t total = 2 * opts.problem_size;
            dsl::ShardedArray<Integer> xs(total, opts.worker_id, opts.worker_count);
            std::uint64_t first_b = std::max(xs.begin_index(), opts.problem_size);
            for (std::uint64_t g = xs.begin_index(); g < std::min(xs.end_index(), opts.problem_size); g++) {
                xs[xs.to_local(g)] = read_record(Party::Garbler);
            }
            for (std::uint64_t g = xs.end_index(); g > first_b; g--) {
                xs[xs.to_local(g - 1)] = read_record(Party::Evaluator);
            }
            for (std::uint64_t j = total / 2; j >= 1; j /= 2) {
                bitonic_stage(xs, total, j, true);
            }
            output_all(xs);
        }

        void sort_program(const dsl::ProgramOptions& opts) {
            std::uint64_t total = 2 * opts.problem_size;
            dsl::ShardedArray<Integer> xs(total, opts.worker_id, opts.worker_count);
            for (std::uint64_t i = 0; i != xs.local_size(); i++) {
                xs[i] = read_record(xs.to_global(i) < opts.problem_size ? Party::Garbler : Party::Evaluator);
            }
            for (std::uint64_t k = 2; k <= total; k *= 2) {
                for (std::uint64_t j = k / 2; j >= 1; j /= 2) {
                    bitonic_stage(xs, k, j, false);
                }
            }
            output_all(xs);
        }

        /*
         * Output record per pair: low 64 bits carry the left payload, the
         * next 63 bits the right payload, and the top bit says whether the
         * keys matched. Non-matching pairs are all zeros.
         */
        void ljoin_program(const dsl::ProgramOptions& opts) {
            std::uint64_t n = opts.problem_size;
            std::vector<Integer> left, right, out;
            for (std::uint64_t i = 0; i != n; i++) {
                left.push_back(read_record(Party::Garbler));
            }
            for (std::uint64_t i = 0; i != n; i++) {
                right.push_back(read_record(Party::Evaluator));
            }
            Integer zero64 = Integer::constant(64, 0);
            Integer zero63 = Integer::constant(63, 0);
            out.reserve(n * n);
            for (std::uint64_t i = 0; i != n; i++) {
                for (std::uint64_t j = 0; j != n; j++) {
                    Integer match = left[i].slice(0, key_bits) == right[j].slice(0, key_bits);
                    Integer rec(record_bits);
                    rec.slice(0, 64).assign(mux(match, left[i].slice(64, 64), zero64));
                    rec.slice(64, 63).assign(mux(match, right[j].slice(64, 63), zero63));
                    rec.bit(127).assign(match);
                    out.push_back(std::move(rec));
                }
            }
            for (Integer& r : out) {
                r.mark_output();
            }
        }

        void mvmul_program(const dsl::ProgramOptions& opts) {
            std::uint64_t n = opts.problem_size;
            std::vector<Integer> matrix, raw, vec, out;
            for (std::uint64_t i = 0; i != n * n; i++) {
                Integer m(8);
                m.mark_input(Party::Garbler);
                matrix.push_back(std::move(m));
            }
            for (std::uint64_t j = 0; j != n; j++) {
                Integer v(8);
                v.mark_input(Party::Evaluator);
                raw.push_back(std::move(v));
            }
            for (Integer& v : raw) {
                vec.push_back(dsl::zero_extend(v, 32));
            }
            raw.clear();
            for (std::uint64_t i = 0; i != n; i++) {
                Integer acc;
                for (std::uint64_t j = 0; j != n; j++) {
                    Integer term = dsl::multiply(dsl::zero_extend(matrix[i * n + j], 32), vec[j], 8);
                    acc = acc.valid() ? acc + term : std::move(term);
                }
                out.push_back(std::move(acc));
            }
            for (Integer& y : out) {
                y.mark_output();
            }
        }

        std::uint16_t chunk_bits(std::uint64_t n) {
            return static_cast<std::uint16_t>(std::min<std::uint64_t>(32, n));
        }

        /* y_i = 1 iff at least half of the bits of row i agree with x. */
        void binfclayer_program(const dsl::ProgramOptions& opts) {
            std::uint64_t n = opts.problem_size;
            std::uint16_t cb = chunk_bits(n);
            std::uint64_t chunks = n / cb;
            std::vector<Integer> weights, x, out;
            for (std::uint64_t i = 0; i != n * chunks; i++) {
                Integer w(cb);
                w.mark_input(Party::Garbler);
                weights.push_back(std::move(w));
            }
            for (std::uint64_t c = 0; c != chunks; c++) {
                Integer v(cb);
                v.mark_input(Party::Evaluator);
                x.push_back(std::move(v));
            }
            auto count_width = static_cast<std::uint16_t>(std::bit_width(n) + 1);
            Integer threshold = Integer::constant(count_width, n / 2);
            for (std::uint64_t i = 0; i != n; i++) {
                Integer total;
                for (std::uint64_t c = 0; c != chunks; c++) {
                    Integer agree = dsl::zero_extend(dsl::popcount(~(weights[i * chunks + c] ^ x[c])), count_width);
                    total = total.valid() ? total + agree : std::move(agree);
                }
                out.push_back(total >= threshold);
            }
            for (Integer& y : out) {
                y.mark_output();
            }
        }

        void rsum_program(const dsl::ProgramOptions& opts) {
            dsl::ShardedArray<Batch> xs(opts.problem_size, opts.worker_id, opts.worker_count);
            for (Batch& x : xs.local()) {
                x = Batch::input(dimension());
            }
            Batch acc = std::move(xs[0]);
            for (std::uint64_t i = 1; i != xs.local_size(); i++) {
                acc = acc + xs[i];
                xs[i] = Batch();
            }
            /* Tree reduction toward worker 0. */
            for (WorkerId step = 1; step < opts.worker_count; step *= 2) {
                if (opts.worker_id % (2 * step) == step) {
                    dsl::send(acc, opts.worker_id - step);
                    dsl::barrier();
                    break;
                }
                if (opts.worker_id % (2 * step) == 0 && opts.worker_id + step < opts.worker_count) {
                    Batch other(acc.level(), acc.relinearized(), acc.element_count());
                    dsl::receive(other, opts.worker_id + step);
                    dsl::barrier();
                    acc = acc + other;
                }
            }
            if (opts.worker_id == 0) {
                acc.mark_output();
            }
        }

        /* Per-slot mean and population variance over n ciphertexts. */
        void rstats_program(const dsl::ProgramOptions& opts) {
            std::uint64_t n = opts.problem_size;
            std::vector<Batch> xs;
            for (std::uint64_t i = 0; i != n; i++) {
                xs.push_back(Batch::input(dimension()));
            }
            Batch sum, squares;
            for (Batch& x : xs) {
                Batch sq = mul_no_relin(x, x);
                squares = squares.valid() ? squares + sq : std::move(sq);
                sum = sum.valid() ? sum + x : std::move(x);
            }
            double inv = 1.0 / static_cast<double>(n);
            Batch mean = mul_plain(sum, dsl::encode_fixed(inv));
            Batch neg_mean = mul_plain(sum, dsl::encode_fixed(-inv));
            Batch mean_sq = mul_plain(relin_rescale(squares), dsl::encode_fixed(inv));
            Batch var = mean_sq + relin_rescale(mul_no_relin(mean, neg_mean));
            mean.mark_output();
            var.mark_output();
        }

        std::vector<Batch> read_batches(std::uint64_t count, Party party) {
            std::vector<Batch> out;
            out.reserve(count);
            for (std::uint64_t i = 0; i != count; i++) {
                out.push_back(Batch::input(dimension(), party));
            }
            return out;
        }

        void accumulate(Batch& acc, Batch term) {
            acc = acc.valid() ? acc + term : std::move(term);
        }

        void rmvmul_program(const dsl::ProgramOptions& opts) {
            std::uint64_t n = opts.problem_size;
            std::vector<Batch> m = read_batches(n * n, Party::Garbler);
            std::vector<Batch> v = read_batches(n, Party::Evaluator);
            std::vector<Batch> y;
            for (std::uint64_t i = 0; i != n; i++) {
                Batch acc;
                for (std::uint64_t j = 0; j != n; j++) {
                    accumulate(acc, mul_no_relin(m[i * n + j], v[j]));
                }
                y.push_back(relin_rescale(acc));
            }
            for (Batch& b : y) {
                b.mark_output();
            }
        }

        void naive_matmul_program(const dsl::ProgramOptions& opts) {
            std::uint64_t n = opts.problem_size;
            std::vector<Batch> a = read_batches(n * n, Party::Garbler);
            std::vector<Batch> b = read_batches(n * n, Party::Evaluator);
            std::vector<Batch> c;
            for (std::uint64_t i = 0; i != n; i++) {
                for (std::uint64_t j = 0; j != n; j++) {
                    Batch acc;
                    for (std::uint64_t k = 0; k != n; k++) {
                        accumulate(acc, mul_no_relin(a[i * n + k], b[k * n + j]));
                    }
                    c.push_back(relin_rescale(acc));
                }
            }
            for (Batch& x : c) {
                x.mark_output();
            }
        }

        /* Same sums in the same order as the naive loop, visited tile by tile. */
        void tiled_matmul_program(const dsl::ProgramOptions& opts) {
            std::uint64_t n = opts.problem_size;
            std::uint64_t t = opts.tile != 0 ? opts.tile : std::max<std::uint64_t>(1, n / 4);
            std::vector<Batch> a = read_batches(n * n, Party::Garbler);
            std::vector<Batch> b = read_batches(n * n, Party::Evaluator);
            std::vector<Batch> acc(n * n);
            std::vector<Batch> c(n * n);
            for (std::uint64_t ii = 0; ii < n; ii += t) {
                for (std::uint64_t jj = 0; jj < n; jj += t) {
                    for (std::uint64_t kk = 0; kk < n; kk += t) {
                        for (std::uint64_t i = ii; i != ii + t; i++) {
                            for (std::uint64_t j = jj; j != jj + t; j++) {
                                for (std::uint64_t k = kk; k != kk + t; k++) {
                                    accumulate(acc[i * n + j], mul_no_relin(a[i * n + k], b[k * n + j]));
                                }
                            }
                        }
                    }
                    for (std::uint64_t i = ii; i != ii + t; i++) {
                        for (std::uint64_t j = jj; j != jj + t; j++) {
                            c[i * n + j] = relin_rescale(acc[i * n + j]);
                            acc[i * n + j] = Batch();
                        }
                    }
                }
            }
            for (Batch& x : c) {
                x.mark_output();
            }
        }
    }

    std::string_view name(Workload w) {
        for (const NameEntry& e : names) {
            if (e.kind == w) {
                return e.text;
            }
        }
        return "unknown";
    }

    Workload parse_workload(std::string_view text) {
        for (const NameEntry& e : names) {
            if (e.text == text) {
                return e.kind;
            }
        }
        throw SpecError("unknown workload '" + std::string(text) + "'");
    }

    bytecode::DriverId driver_for(Workload w) {
        switch (w) {
            case Workload::Merge:
            case Workload::Sort:
            case Workload::Ljoin:
            case Workload::Mvmul:
            case Workload::Binfclayer:
                return bytecode::DriverId::BitWire;
            default:
                return bytecode::DriverId::LeveledBatch;
        }
    }

    bool supports_multiple_workers(Workload w) {
        return w == Workload::Merge || w == Workload::Sort || w == Workload::Rsum;
    }

    std::uint64_t effective_tile(const WorkloadSpec& spec) {
        if (spec.kind != Workload::TRmatmul) {
            return 0;
        }
        return spec.tile != 0 ? spec.tile : std::max<std::uint64_t>(1, spec.n / 4);
    }

    void validate(const WorkloadSpec& spec) {
        std::string label(name(spec.kind));
        if (spec.n == 0 || !std::has_single_bit(spec.n)) {
            throw SpecError(label + ": n must be a power of two, got " + std::to_string(spec.n));
        }
        if (spec.worker_count == 0 || !std::has_single_bit(spec.worker_count)) {
            throw SpecError(label + ": worker count must be a power of two");
        }
        if (spec.worker_count > 1 && !supports_multiple_workers(spec.kind)) {
            throw SpecError(label + " runs on a single worker only");
        }
        std::uint64_t elements = spec.kind == Workload::Rsum ? spec.n : 2 * spec.n;
        if (spec.worker_count > 1 && spec.worker_count > elements) {
            throw SpecError(label + ": more workers than elements");
        }
        if (spec.kind == Workload::TRmatmul) {
            std::uint64_t t = effective_tile(spec);
            if (!std::has_single_bit(t) || t > spec.n) {
                throw SpecError("t_rmatmul: tile must be a power of two no larger than n");
            }
        }
    }

    dsl::ProgramFn build_workload(const WorkloadSpec& spec) {
        validate(spec);
        switch (spec.kind) {
            case Workload::Merge:
                return merge_program;
            case Workload::Sort:
                return sort_program;
            case Workload::Ljoin:
                return ljoin_program;
            case Workload::Mvmul:
                return mvmul_program;
            case Workload::Binfclayer:
                return binfclayer_program;
            case Workload::Rsum:
                return rsum_program;
            case Workload::Rstats:
                return rstats_program;
            case Workload::Rmvmul:
                return rmvmul_program;
            case Workload::NRmatmul:
                return naive_matmul_program;
            case Workload::TRmatmul:
                return tiled_matmul_program;
        }
        throw SpecError("unknown workload");
    }
}
