#pragma once

#include <cstdint>
#include <vector>

#include "calign/aligner.hpp"

namespace calign {

struct EquationRow {
    int receiver = 0;
    int subchannel = 0;                     ///< filter id at that receiver
    std::vector<std::int64_t> coefficients; ///< per column, reduced mod q
};

/// Linear equations over Z_q in the stream messages. Column i is stream columns[i].
struct EquationSystem {
    std::int64_t q = 2;
    std::vector<StreamRef> columns;
    std::vector<EquationRow> rows;

    int column_of(StreamRef s) const;
};

bool is_prime(std::int64_t n);
/// Smallest prime strictly greater than 2*max_abs_coefficient.
std::int64_t smallest_safe_prime(std::int64_t max_abs_coefficient);
/// Largest |a_k| over the given subchannels.
std::int64_t max_abs_coefficient(const std::vector<Subchannel>& subchannels);

/// One row per unflagged subchannel, columns ordered by (transmitter, vector index) over
/// every stream of the precoder set. Throws ModulusError when q is not prime or divides a
/// nonzero coefficient.
EquationSystem target_equations(const std::vector<Subchannel>& subchannels,
                                const TransmitVectorSet& precoders, std::int64_t q);

/// Builds a system from explicit integer rows (used by tests and the multilayer relay logic).
EquationSystem make_system(std::int64_t q, std::vector<StreamRef> columns,
                           const std::vector<std::vector<std::int64_t>>& rows);

struct InvertibilityReport {
    bool invertible = false;
    std::size_t rank = 0;
    /// Successive-recovery order when every unknown can be peeled off by rows with a
    /// single remaining unknown; empty otherwise.
    std::vector<StreamRef> peel_order;
    bool chain = false;
};

std::size_t rank_mod_q(std::vector<std::vector<std::int64_t>> rows, std::int64_t q);

InvertibilityReport check_invertible(const EquationSystem& system);

/// Evaluates every row on the given per-column messages (each a vector of length kappa).
std::vector<std::vector<std::int64_t>> evaluate_rows(
    const EquationSystem& system, const std::vector<std::vector<std::int64_t>>& messages);

/// Solves the system for the per-column messages. Throws DomainError when the system is
/// not invertible and DecodeIntegrityError when the values admit no consistent solution.
std::vector<std::vector<std::int64_t>> recover_messages(
    const EquationSystem& system, const std::vector<std::vector<std::int64_t>>& decoded_values);

/// Rows with exactly the given indices, keeping q and columns.
EquationSystem select_rows(const EquationSystem& system, const std::vector<std::size_t>& indices);

/// Greedily picks rows (in order, round-robin over receivers) that raise the rank until it
/// reaches the column count or rows run out.
std::vector<std::size_t> greedy_full_rank_rows(const EquationSystem& system);

}  // namespace calign
