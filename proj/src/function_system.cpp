#include "calign/function_system.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <tuple>
#include <utility>

#include <fmt/core.h>

namespace calign {
namespace {

std::int64_t reduce(std::int64_t a, std::int64_t q) { return ((a % q) + q) % q; }

std::int64_t mul_mod(std::int64_t a, std::int64_t b, std::int64_t q) {
    return static_cast<std::int64_t>(static_cast<__int128>(a) * b % q);
}

std::int64_t inverse_mod(std::int64_t a, std::int64_t q) {
    // Extended Euclid; q prime and a != 0 mod q.
    std::int64_t t = 0, new_t = 1, r = q, new_r = reduce(a, q);
    while (new_r != 0) {
        const std::int64_t quot = r / new_r;
        std::tie(t, new_t) = std::make_pair(new_t, t - quot * new_t);
        std::tie(r, new_r) = std::make_pair(new_r, r - quot * new_r);
    }
    if (r != 1) throw DomainError(fmt::format("inverse_mod: {} is not invertible mod {}", a, q));
    return reduce(t, q);
}

void require_prime(std::int64_t q) {
    if (!is_prime(q)) throw ModulusError(fmt::format("modulus q = {} is not prime", q));
}

}  // namespace

int EquationSystem::column_of(StreamRef s) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == s) return static_cast<int>(i);
    }
    return -1;
}

bool is_prime(std::int64_t n) {
    if (n < 2) return false;
    for (std::int64_t d = 2; d * d <= n; ++d) {
        if (n % d == 0) return false;
    }
    return true;
}

std::int64_t smallest_safe_prime(std::int64_t max_abs_coefficient) {
    std::int64_t p = 2 * std::llabs(max_abs_coefficient) + 1;
    while (!is_prime(p)) ++p;
    return p;
}

std::int64_t max_abs_coefficient(const std::vector<Subchannel>& subchannels) {
    std::int64_t m = 0;
    for (const auto& sc : subchannels) {
        for (auto a : sc.spec.coefficients) m = std::max<std::int64_t>(m, std::llabs(a));
    }
    return m;
}

EquationSystem target_equations(const std::vector<Subchannel>& subchannels,
                                const TransmitVectorSet& precoders, std::int64_t q) {
    require_prime(q);
    EquationSystem sys;
    sys.q = q;
    for (int k = 0; k < precoders.K(); ++k) {
        for (const auto& v : precoders.vectors[k]) sys.columns.push_back({k, v.index});
    }
    for (const auto& sc : subchannels) {
        if (sc.spec.flagged) continue;
        EquationRow row;
        row.receiver = sc.spec.receiver;
        row.subchannel = sc.spec.filter_id;
        row.coefficients.assign(sys.columns.size(), 0);
        for (const auto& s : sc.spec.streams) {
            const std::int64_t a = sc.spec.coefficients[s.k];
            if (a % q == 0) {
                throw ModulusError(fmt::format(
                    "q = {} divides coefficient {} at receiver {}, subchannel {}", q, a,
                    row.receiver, row.subchannel));
            }
            row.coefficients[sys.column_of(s)] = reduce(a, q);
        }
        sys.rows.push_back(std::move(row));
    }
    return sys;
}

EquationSystem make_system(std::int64_t q, std::vector<StreamRef> columns,
                           const std::vector<std::vector<std::int64_t>>& rows) {
    require_prime(q);
    EquationSystem sys;
    sys.q = q;
    sys.columns = std::move(columns);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != sys.columns.size()) {
            throw ConfigError(fmt::format("make_system: row {} has {} entries, expected {}", i,
                                          rows[i].size(), sys.columns.size()));
        }
        EquationRow row;
        row.subchannel = static_cast<int>(i);
        for (auto a : rows[i]) row.coefficients.push_back(reduce(a, q));
        sys.rows.push_back(std::move(row));
    }
    return sys;
}

std::size_t rank_mod_q(std::vector<std::vector<std::int64_t>> rows, std::int64_t q) {
    if (rows.empty()) return 0;
    const std::size_t n = rows[0].size();
    std::size_t rank = 0;
    for (std::size_t col = 0; col < n && rank < rows.size(); ++col) {
        std::size_t pivot = rank;
        while (pivot < rows.size() && reduce(rows[pivot][col], q) == 0) ++pivot;
        if (pivot == rows.size()) continue;
        std::swap(rows[rank], rows[pivot]);
        const std::int64_t inv = inverse_mod(rows[rank][col], q);
        for (auto& x : rows[rank]) x = mul_mod(reduce(x, q), inv, q);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (r == rank) continue;
            const std::int64_t f = reduce(rows[r][col], q);
            if (f == 0) continue;
            for (std::size_t c = col; c < n; ++c) {
                rows[r][c] = reduce(rows[r][c] - mul_mod(f, rows[rank][c], q), q);
            }
        }
        ++rank;
    }
    return rank;
}

InvertibilityReport check_invertible(const EquationSystem& system) {
    InvertibilityReport report;
    std::vector<std::vector<std::int64_t>> rows;
    for (const auto& r : system.rows) rows.push_back(r.coefficients);
    report.rank = rank_mod_q(rows, system.q);
    report.invertible = report.rank == system.columns.size();

    // Peeling: repeatedly take the first row with exactly one unrecovered unknown.
    std::vector<bool> known(system.columns.size(), false);
    std::size_t recovered = 0;
    bool progress = true;
    while (progress && recovered < known.size()) {
        progress = false;
        for (const auto& r : system.rows) {
            int unknown = -1, count = 0;
            for (std::size_t c = 0; c < known.size(); ++c) {
                if (r.coefficients[c] != 0 && !known[c]) {
                    unknown = static_cast<int>(c);
                    ++count;
                }
            }
            if (count == 1) {
                known[unknown] = true;
                report.peel_order.push_back(system.columns[unknown]);
                ++recovered;
                progress = true;
                break;
            }
        }
    }
    report.chain = recovered == known.size() && !known.empty();
    if (!report.chain) report.peel_order.clear();
    return report;
}

std::vector<std::vector<std::int64_t>> evaluate_rows(
    const EquationSystem& system, const std::vector<std::vector<std::int64_t>>& messages) {
    if (messages.size() != system.columns.size()) {
        throw ConfigError("evaluate_rows: one message per column required");
    }
    const std::size_t kappa = messages.empty() ? 0 : messages[0].size();
    std::vector<std::vector<std::int64_t>> values;
    for (const auto& r : system.rows) {
        std::vector<std::int64_t> u(kappa, 0);
        for (std::size_t c = 0; c < messages.size(); ++c) {
            if (r.coefficients[c] == 0) continue;
            for (std::size_t i = 0; i < kappa; ++i) {
                u[i] = reduce(u[i] + mul_mod(r.coefficients[c], reduce(messages[c][i], system.q), system.q),
                              system.q);
            }
        }
        values.push_back(std::move(u));
    }
    return values;
}

std::vector<std::vector<std::int64_t>> recover_messages(
    const EquationSystem& system, const std::vector<std::vector<std::int64_t>>& decoded_values) {
    const std::size_t n = system.columns.size();
    const std::size_t R = system.rows.size();
    const std::int64_t q = system.q;
    if (decoded_values.size() != R) {
        throw ConfigError(fmt::format("recover_messages: {} values for {} rows", decoded_values.size(), R));
    }
    const std::size_t kappa = R == 0 ? 0 : decoded_values[0].size();

    // Augmented matrix [A | U], reduced to row echelon form mod q.
    std::vector<std::vector<std::int64_t>> M(R, std::vector<std::int64_t>(n + kappa));
    for (std::size_t r = 0; r < R; ++r) {
        if (decoded_values[r].size() != kappa) throw ConfigError("recover_messages: ragged values");
        for (std::size_t c = 0; c < n; ++c) M[r][c] = reduce(system.rows[r].coefficients[c], q);
        for (std::size_t i = 0; i < kappa; ++i) M[r][n + i] = reduce(decoded_values[r][i], q);
    }
    std::vector<std::size_t> pivot_row(n);
    std::size_t rank = 0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t p = rank;
        while (p < R && M[p][col] == 0) ++p;
        if (p == R) {
            throw DomainError(fmt::format("recover_messages: system has rank deficiency at column {}", col));
        }
        std::swap(M[rank], M[p]);
        const std::int64_t inv = inverse_mod(M[rank][col], q);
        for (auto& x : M[rank]) x = mul_mod(x, inv, q);
        for (std::size_t r = 0; r < R; ++r) {
            if (r == rank || M[r][col] == 0) continue;
            const std::int64_t f = M[r][col];
            for (std::size_t c = col; c < n + kappa; ++c) M[r][c] = reduce(M[r][c] - mul_mod(f, M[rank][c], q), q);
        }
        pivot_row[col] = rank++;
    }
    // Rows beyond the rank must have reduced to 0 = 0.
    for (std::size_t r = rank; r < R; ++r) {
        for (std::size_t i = 0; i < kappa; ++i) {
            if (M[r][n + i] != 0) {
                throw DecodeIntegrityError(fmt::format(
                    "recover_messages: decoded values inconsistent with equation {}", r));
            }
        }
    }
    std::vector<std::vector<std::int64_t>> messages(n);
    for (std::size_t c = 0; c < n; ++c) {
        messages[c].assign(M[pivot_row[c]].begin() + n, M[pivot_row[c]].end());
    }
    return messages;
}

EquationSystem select_rows(const EquationSystem& system, const std::vector<std::size_t>& indices) {
    EquationSystem out;
    out.q = system.q;
    out.columns = system.columns;
    for (auto i : indices) out.rows.push_back(system.rows.at(i));
    return out;
}

std::vector<std::size_t> greedy_full_rank_rows(const EquationSystem& system) {
    // Interleave receivers so that each contributes a similar number of rows.
    std::map<int, std::vector<std::size_t>> by_receiver;
    for (std::size_t i = 0; i < system.rows.size(); ++i) by_receiver[system.rows[i].receiver].push_back(i);
    std::vector<std::size_t> order;
    for (std::size_t round = 0;; ++round) {
        bool any = false;
        for (auto& [m, idx] : by_receiver) {
            if (round < idx.size()) {
                order.push_back(idx[round]);
                any = true;
            }
        }
        if (!any) break;
    }
    std::vector<std::size_t> chosen;
    std::vector<std::vector<std::int64_t>> rows;
    std::size_t rank = 0;
    for (auto i : order) {
        if (rank == system.columns.size()) break;
        rows.push_back(system.rows[i].coefficients);
        const std::size_t r = rank_mod_q(rows, system.q);
        if (r > rank) {
            rank = r;
            chosen.push_back(i);
        } else {
            rows.pop_back();
        }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace calign
