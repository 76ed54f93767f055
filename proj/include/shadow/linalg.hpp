#pragma once

#include <cstdint>

#include "shadow/types.hpp"

namespace shadow {

struct ThinQR {
  Mat Q; ///< n x k, orthonormal columns
  Mat R; ///< k x k, upper triangular with non-negative diagonal
};

/// Householder thin QR of an n x k matrix (k <= n) with the sign convention
/// diag(R) >= 0, which makes Q and R unique for full-rank input.
ThinQR thin_qr(MatRef a);

/// Orthonormal basis of the orthogonal complement of span(a), n x (n - k).
Mat orthogonal_complement(MatRef a);

/// Standard-normal n x k matrix drawn from `seed`.
Mat gaussian_matrix(Index rows, Index cols, std::uint64_t seed);

/// 2-norm condition number via SVD; infinity when singular.
double condition_number(MatRef a);

} // namespace shadow
