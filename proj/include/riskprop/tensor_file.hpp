#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "riskprop/matrix.hpp"

namespace riskprop::nn {

struct NamedTensor {
  std::string name;
  Matrix value;
};

/// Text tensor archive:
///
///   riskprop-tensors<TAB>1
///   meta<TAB><key><TAB><value>                  (zero or more)
///   tensor<TAB><name><TAB><rows><TAB><cols>     (manifest, one per tensor)
///   checksum<TAB><fnv1a64 hex of the data section>
///   data
///   <name><TAB><row><TAB>v0<TAB>v1...           (one line per tensor row)
///
/// Values use 17 significant digits, so a save/load cycle is bit-exact.
struct TensorArchive {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<NamedTensor> tensors;

  const std::string* find_meta(std::string_view key) const;
};

void save_tensor_archive(const TensorArchive& archive, const std::filesystem::path& path);
/// Verifies the header, manifest shapes and checksum.
TensorArchive load_tensor_archive(const std::filesystem::path& path);

}  // namespace riskprop::nn
