#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "memplan/drivers/config.hpp"
#include "memplan/engine/io.hpp"
#include "memplan/workloads/workloads.hpp"

/*
 * Plaintext reference results computed with host integers, independent of
 * the DSL builders and the protocol drivers.
 */

namespace memplan::workloads {
    using engine::u128;

    namespace {
        using Row = std::vector<std::int64_t>;

        class Source {
        public:
            explicit Source(std::uint64_t seed) : rng(seed) {}

            std::uint64_t bits(unsigned count) {
                std::uint64_t v = this->rng();
                return count >= 64 ? v : v & ((std::uint64_t(1) << count) - 1);
            }

            std::uint64_t below(std::uint64_t bound) {
                return this->rng() % bound;
            }

            std::int64_t between(std::int64_t lo, std::int64_t hi) {
                return lo + static_cast<std::int64_t>(this->below(static_cast<std::uint64_t>(hi - lo + 1)));
            }

            template <typename T>
            void shuffle(std::vector<T>& xs) {
                for (std::size_t i = xs.size(); i > 1; i--) {
                    std::swap(xs[i - 1], xs[this->below(i)]);
                }
            }

        private:
            std::mt19937_64 rng;
        };

        u128 make_record(std::uint32_t key, Source& src) {
            u128 payload = (static_cast<u128>(src.bits(64)) << 32) | src.bits(32);
            return (payload << 32) | key;
        }

        std::uint32_t key_of(u128 r) {
            return static_cast<std::uint32_t>(r);
        }

        std::vector<std::uint32_t> distinct_keys(std::size_t count, Source& src) {
            std::set<std::uint32_t> seen;
            std::vector<std::uint32_t> keys;
            while (keys.size() != count) {
                auto k = static_cast<std::uint32_t>(src.bits(32));
                if (seen.insert(k).second) {
                    keys.push_back(k);
                }
            }
            return keys;
        }

        std::vector<u128> sorted_by_key(std::vector<u128> rs) {
            std::sort(rs.begin(), rs.end(), [](u128 a, u128 b) { return key_of(a) < key_of(b); });
            return rs;
        }

        /* round(a * b / 2^f) with ties toward +infinity, via floor division. */
        std::int64_t scaled_product(std::int64_t a, std::int64_t b) {
            __int128 num = static_cast<__int128>(a) * b * 2 + (static_cast<__int128>(1) << drivers::fixed_point_bits);
            __int128 den = static_cast<__int128>(2) << drivers::fixed_point_bits;
            __int128 q = num / den;
            if (num % den != 0 && num < 0) {
                q--;
            }
            return static_cast<std::int64_t>(q);
        }

        Row slotwise_product(const Row& a, const Row& b) {
            Row out(a.size());
            for (std::size_t s = 0; s != a.size(); s++) {
                out[s] = scaled_product(a[s], b[s]);
            }
            return out;
        }

        Row scale(const Row& a, std::int64_t k) {
            Row out(a.size());
            for (std::size_t s = 0; s != a.size(); s++) {
                out[s] = scaled_product(a[s], k);
            }
            return out;
        }

        void add_into(Row& acc, const Row& x) {
            if (acc.empty()) {
                acc = x;
                return;
            }
            for (std::size_t s = 0; s != acc.size(); s++) {
                acc[s] += x[s];
            }
        }

        /* Multiples of 1/16 in [-range/16, range/16]. */
        Row random_row(std::uint32_t dimension, std::int64_t range, Source& src) {
            Row row(dimension);
            for (auto& v : row) {
                v = src.between(-range, range) << (drivers::fixed_point_bits - 4);
            }
            return row;
        }

        std::string integers(const std::vector<u128>& xs) {
            std::ostringstream out;
            for (u128 x : xs) {
                engine::write_integer(out, x);
            }
            return out.str();
        }

        std::string rows(const std::vector<Row>& xs) {
            std::ostringstream out;
            for (const Row& r : xs) {
                engine::write_row(out, r);
            }
            return out.str();
        }

        GeneratedInputs merge_inputs(const WorkloadSpec& spec, Source& src) {
            std::uint64_t n = spec.n;
            std::vector<std::uint32_t> keys = distinct_keys(2 * n, src);
            std::vector<u128> all;
            for (std::uint32_t k : keys) {
                all.push_back(make_record(k, src));
            }
            std::vector<u128> a = sorted_by_key({all.begin(), all.begin() + n});
            std::vector<u128> b = sorted_by_key({all.begin() + n, all.end()});
            /* Worker w holds positions [wL, (w+1)L) of a ++ reverse(b). */
            std::uint64_t local = 2 * n / spec.worker_count;
            GeneratedInputs out;
            for (WorkerId w = 0; w != spec.worker_count; w++) {
                std::vector<u128> mine;
                std::uint64_t lo = w * local, hi = lo + local;
                for (std::uint64_t g = lo; g < std::min(hi, n); g++) {
                    mine.push_back(a[g]);
                }
                for (std::uint64_t g = hi; g > std::max(lo, n); g--) {
                    mine.push_back(b[2 * n - g]);
                }
                out.worker_inputs.push_back(integers(mine));
            }
            out.expected_output = integers(sorted_by_key(all));
            return out;
        }

        GeneratedInputs sort_inputs(const WorkloadSpec& spec, Source& src) {
            std::vector<u128> all;
            for (std::uint32_t k : distinct_keys(2 * spec.n, src)) {
                all.push_back(make_record(k, src));
            }
            std::uint64_t local = all.size() / spec.worker_count;
            GeneratedInputs out;
            for (WorkerId w = 0; w != spec.worker_count; w++) {
                out.worker_inputs.push_back(integers({all.begin() + w * local, all.begin() + (w + 1) * local}));
            }
            out.expected_output = integers(sorted_by_key(all));
            return out;
        }

        GeneratedInputs ljoin_inputs(const WorkloadSpec& spec, Source& src) {
            std::uint64_t n = spec.n;
            std::uint64_t key_range = std::max<std::uint64_t>(1, n / 2);
            std::vector<u128> left, right, joined;
            for (std::uint64_t i = 0; i != 2 * n; i++) {
                (i < n ? left : right).push_back(make_record(static_cast<std::uint32_t>(src.below(key_range)), src));
            }
            const u128 low64 = (static_cast<u128>(1) << 64) - 1;
            const u128 low63 = (static_cast<u128>(1) << 63) - 1;
            for (u128 l : left) {
                for (u128 r : right) {
                    if (key_of(l) != key_of(r)) {
                        joined.push_back(0);
                        continue;
                    }
                    u128 rec = (l >> 64) & low64;
                    rec |= ((r >> 64) & low63) << 64;
                    rec |= static_cast<u128>(1) << 127;
                    joined.push_back(rec);
                }
            }
            std::vector<u128> all = left;
            all.insert(all.end(), right.begin(), right.end());
            return {{integers(all)}, integers(joined)};
        }

        GeneratedInputs mvmul_inputs(const WorkloadSpec& spec, Source& src) {
            std::uint64_t n = spec.n;
            std::vector<u128> m(n * n), v(n), y(n, 0);
            for (auto& x : m) {
                x = src.bits(8);
            }
            for (auto& x : v) {
                x = src.bits(8);
            }
            for (std::uint64_t i = 0; i != n; i++) {
                std::uint32_t acc = 0;
                for (std::uint64_t j = 0; j != n; j++) {
                    acc += static_cast<std::uint32_t>(m[i * n + j] * v[j]);
                }
                y[i] = acc;
            }
            std::vector<u128> all = m;
            all.insert(all.end(), v.begin(), v.end());
            return {{integers(all)}, integers(y)};
        }

        GeneratedInputs binfclayer_inputs(const WorkloadSpec& spec, Source& src) {
            std::uint64_t n = spec.n;
            unsigned chunk = static_cast<unsigned>(std::min<std::uint64_t>(32, n));
            std::uint64_t chunks = n / chunk;
            std::vector<u128> w(n * chunks), x(chunks), y(n);
            for (auto& c : w) {
                c = src.bits(chunk);
            }
            for (auto& c : x) {
                c = src.bits(chunk);
            }
            for (std::uint64_t i = 0; i != n; i++) {
                std::uint64_t agree = 0;
                for (std::uint64_t c = 0; c != chunks; c++) {
                    for (unsigned b = 0; b != chunk; b++) {
                        agree += ((w[i * chunks + c] >> b) & 1) == ((x[c] >> b) & 1);
                    }
                }
                y[i] = 2 * agree >= n ? 1 : 0;
            }
            std::vector<u128> all = w;
            all.insert(all.end(), x.begin(), x.end());
            return {{integers(all)}, integers(y)};
        }

        GeneratedInputs rsum_inputs(const WorkloadSpec& spec, std::uint32_t dimension, Source& src) {
            std::vector<Row> xs;
            Row total;
            for (std::uint64_t i = 0; i != spec.n; i++) {
                xs.push_back(random_row(dimension, 128, src));
                add_into(total, xs.back());
            }
            std::uint64_t local = spec.n / spec.worker_count;
            GeneratedInputs out;
            for (WorkerId w = 0; w != spec.worker_count; w++) {
                out.worker_inputs.push_back(rows({xs.begin() + w * local, xs.begin() + (w + 1) * local}));
            }
            out.expected_output = rows({total});
            return out;
        }

        GeneratedInputs rstats_inputs(const WorkloadSpec& spec, std::uint32_t dimension, Source& src) {
            std::vector<Row> xs;
            Row sum, squares;
            for (std::uint64_t i = 0; i != spec.n; i++) {
                xs.push_back(random_row(dimension, 128, src));
                add_into(sum, xs.back());
                add_into(squares, slotwise_product(xs.back(), xs.back()));
            }
            /* n is a power of two, so 1/n is exact in fixed point. */
            std::int64_t inv = (std::int64_t(1) << drivers::fixed_point_bits) / static_cast<std::int64_t>(spec.n);
            Row mean = scale(sum, inv);
            Row var = scale(squares, inv);
            add_into(var, slotwise_product(mean, scale(sum, -inv)));
            return {{rows(xs)}, rows({mean, var})};
        }

        std::vector<Row> random_rows(std::uint64_t count, std::uint32_t dimension, Source& src) {
            std::vector<Row> out;
            for (std::uint64_t i = 0; i != count; i++) {
                out.push_back(random_row(dimension, 32, src));
            }
            return out;
        }

        GeneratedInputs rmvmul_inputs(const WorkloadSpec& spec, std::uint32_t dimension, Source& src) {
            std::uint64_t n = spec.n;
            std::vector<Row> m = random_rows(n * n, dimension, src);
            std::vector<Row> v = random_rows(n, dimension, src);
            std::vector<Row> y(n);
            for (std::uint64_t i = 0; i != n; i++) {
                for (std::uint64_t j = 0; j != n; j++) {
                    add_into(y[i], slotwise_product(m[i * n + j], v[j]));
                }
            }
            std::vector<Row> all = m;
            all.insert(all.end(), v.begin(), v.end());
            return {{rows(all)}, rows(y)};
        }

        GeneratedInputs matmul_inputs(const WorkloadSpec& spec, std::uint32_t dimension, Source& src) {
            std::uint64_t n = spec.n;
            std::vector<Row> a = random_rows(n * n, dimension, src);
            std::vector<Row> b = random_rows(n * n, dimension, src);
            std::vector<Row> c(n * n);
            for (std::uint64_t i = 0; i != n; i++) {
                for (std::uint64_t j = 0; j != n; j++) {
                    for (std::uint64_t k = 0; k != n; k++) {
                        add_into(c[i * n + j], slotwise_product(a[i * n + k], b[k * n + j]));
                    }
                }
            }
            std::vector<Row> all = a;
            all.insert(all.end(), b.begin(), b.end());
            return {{rows(all)}, rows(c)};
        }
    }

    GeneratedInputs generate_inputs(const WorkloadSpec& spec, std::uint64_t seed, std::uint32_t dimension) {
        validate(spec);
        Source src(seed);
        switch (spec.kind) {
            case Workload::Merge:
                return merge_inputs(spec, src);
            case Workload::Sort:
                return sort_inputs(spec, src);
            case Workload::Ljoin:
                return ljoin_inputs(spec, src);
            case Workload::Mvmul:
                return mvmul_inputs(spec, src);
            case Workload::Binfclayer:
                return binfclayer_inputs(spec, src);
            case Workload::Rsum:
                return rsum_inputs(spec, dimension, src);
            case Workload::Rstats:
                return rstats_inputs(spec, dimension, src);
            case Workload::Rmvmul:
                return rmvmul_inputs(spec, dimension, src);
            case Workload::NRmatmul:
            case Workload::TRmatmul:
                return matmul_inputs(spec, dimension, src);
        }
        return {};
    }
}
