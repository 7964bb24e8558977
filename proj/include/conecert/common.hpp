#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace conecert {

/// Raised when a numerical routine (simplex pivoting, eigensolve) degenerates
/// beyond its iteration or conditioning budget.
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::string to_hex(std::uint64_t value);

/// Hash over the raw IEEE-754 bytes of a matrix plus its shape.
std::uint64_t hash_matrix(const Eigen::MatrixXd& m);

/// Writes content through a temporary file and renames it into place, so a
/// crash mid-write never leaves a partial file at path.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace conecert
