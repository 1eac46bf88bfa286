#pragma once

#include <random>

#include "qsa/linalg.hpp"

namespace qsa {

// Standard complex Gaussian entries.
Mat random_gaussian_matrix(int rows, int cols, std::mt19937_64& rng);

// Haar-like unitary from the QR decomposition of a Gaussian matrix.
Mat random_unitary(int dim, std::mt19937_64& rng);

Vec random_unit_vector(int dim, std::mt19937_64& rng);

}  // namespace qsa
