#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "sopbound/pencil.hpp"

namespace sopbound::io {

// Plain-text matrices: one row per line, whitespace-separated entries,
// complex entries written as "re+imj" (a bare real is accepted). Lines
// starting with '#' are comments. A blank line ends a matrix.

std::complex<double> parse_complex(std::string_view token);
std::string format_complex(std::complex<double> value);

/// Reads one matrix block; returns an empty matrix at end of input.
Eigen::MatrixXcd read_matrix(std::istream& in);
void write_matrix(std::ostream& out, const Eigen::MatrixXcd& m);

/// Inline form used in config files: rows separated by ';'.
Eigen::MatrixXcd parse_inline_matrix(std::string_view text);

/// A pencil file holds B, a blank line, then A.
pencil::MatrixPencil read_pencil(std::istream& in);
pencil::MatrixPencil read_pencil_file(const std::string& path);
void write_pencil(std::ostream& out, const pencil::MatrixPencil& p);

}  // namespace sopbound::io
