#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hampdti/matrix.hpp"

// Text formats for parameters and feature matrices. Numbers are written in
// shortest round-trip form, so save/load is exact.
//
// Checkpoint (version 1):
//   hampdti-checkpoint 1
//   meta <key> <value...>            zero or more
//   tensor <name> <rows> <cols>      then `rows` lines of `cols` values
//   end
//
// Matrix file:
//   # hampdti-matrix <rows> <cols>
//   <cols values>                    one line per row
namespace hampdti::tensor {

struct NamedMatrix {
  std::string name;
  Matrix value;
};

struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<NamedMatrix> tensors;

  const Matrix& get(const std::string& name) const;
  bool contains(const std::string& name) const;
};

std::string format_double(double v);
double parse_double(const std::string& token);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_to_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_string(const std::string& text);

void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

}  // namespace hampdti::tensor
