#pragma once

#include "pso/distributions.hpp"
#include "pso/surface_model.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pso::cli {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kThetaLayoutVersion = 1;

struct Checkpoint {
  std::uint64_t experiment_hash = 0;
  std::int64_t iteration = 0;
  NetworkSpec spec;
  Vector mean;
  Vector std;
  DistributionDescriptor down;
  ParamVector theta;
};

// Little-endian container:
//   "PSOCKPT\0" | u32 version | u64 hash | i64 iteration | spec | u32 n, f64 mean[n], f64 std[n]
//   | u32 down kind, u32 down dim, u64 count, f64 params[count] | u32 layout, u64 len, f64 theta[len]
//   | u64 FNV-1a of every preceding byte
std::string encode_checkpoint(const Checkpoint& c);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// "PSOGRAM\0" | u32 version | u64 rows | u64 cols | f64 data (row-major) | u64 FNV-1a
std::string encode_gramian(const Eigen::MatrixXd& G);
Eigen::MatrixXd decode_gramian(const std::string& bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace pso::cli
