#pragma once

#include "pso/trainer.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pso::cli {

inline constexpr const char* kMetricsHeader = "iter,lr,psqr,lsqr,is_err,grad_norm,wall_time";

// 17 significant digits, locale independent; non-finite values print as nan, inf, -inf.
std::string format_real(double v);

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row);
void write_metrics_csv(std::ostream& out, const MetricsTrace& trace);

// Numeric CSV with a header line; every row must have the header's column count.
void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& header);
Matrix read_matrix_csv(const std::string& path, bool has_header = true);

}  // namespace pso::cli
