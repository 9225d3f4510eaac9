#include "riskprop/tensor_file.hpp"

#include <cstdio>
#include <sstream>

#include "riskprop/error.hpp"
#include "riskprop/text_io.hpp"

namespace riskprop::nn {

namespace {

constexpr const char* kMagic = "riskprop-tensors";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

const std::string* TensorArchive::find_meta(std::string_view key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return &v;
  }
  return nullptr;
}

void save_tensor_archive(const TensorArchive& archive, const std::filesystem::path& path) {
  std::ostringstream data;
  for (const auto& t : archive.tensors) {
    for (std::size_t r = 0; r < t.value.rows(); ++r) {
      data << t.name << '\t' << r;
      for (double v : t.value.row(r)) data << '\t' << io::format_double(v);
      data << '\n';
    }
  }
  const std::string body = data.str();
  std::ostringstream out;
  out << kMagic << "\t1\n";
  for (const auto& [k, v] : archive.meta) out << "meta\t" << k << '\t' << v << '\n';
  for (const auto& t : archive.tensors) {
    out << "tensor\t" << t.name << '\t' << t.value.rows() << '\t' << t.value.cols() << '\n';
  }
  out << "checksum\t" << hex64(io::fnv1a64(body)) << "\ndata\n" << body;
  io::write_file_atomic(path, out.str());
}

TensorArchive load_tensor_archive(const std::filesystem::path& path) {
  const std::string content = io::read_file(path);
  io::LineReader in(path);
  std::string line;
  if (!in.next(line) || line != std::string(kMagic) + "\t1") in.fail("not a tensor archive (bad header)");
  TensorArchive archive;
  std::string checksum;
  while (true) {
    if (!in.next(line)) in.fail("unexpected end of manifest");
    if (line == "data") break;
    auto cols = io::split(line, '\t');
    if (cols[0] == "meta" && cols.size() == 3) {
      archive.meta.emplace_back(std::string(cols[1]), std::string(cols[2]));
    } else if (cols[0] == "tensor" && cols.size() == 4) {
      auto rows = io::parse_uint(cols[2], path, in.line_number());
      auto c = io::parse_uint(cols[3], path, in.line_number());
      archive.tensors.push_back({std::string(cols[1]), Matrix(rows, c)});
    } else if (cols[0] == "checksum" && cols.size() == 2) {
      checksum = std::string(cols[1]);
    } else {
      in.fail("unrecognized manifest line");
    }
  }
  // Everything after the "data" line is the checksummed body.
  const auto marker = content.find("\ndata\n");
  const std::string_view body = std::string_view(content).substr(marker + 6);
  if (hex64(io::fnv1a64(body)) != checksum) {
    throw ParseError(path.string() + ": checksum mismatch (file corrupted or edited)");
  }
  std::size_t tensor = 0, row = 0;
  while (in.next(line)) {
    if (line.empty()) continue;
    while (tensor < archive.tensors.size() && row == archive.tensors[tensor].value.rows()) {
      ++tensor;
      row = 0;
    }
    if (tensor == archive.tensors.size()) in.fail("more data rows than the manifest declares");
    auto& t = archive.tensors[tensor];
    auto cols = io::split(line, '\t');
    if (cols.size() != t.value.cols() + 2 || cols[0] != t.name ||
        io::parse_uint(cols[1], path, in.line_number()) != row) {
      in.fail("data row does not match manifest entry '" + t.name + "' row " + std::to_string(row));
    }
    for (std::size_t c = 0; c < t.value.cols(); ++c) {
      t.value(row, c) = io::parse_double(cols[c + 2], path, in.line_number());
    }
    ++row;
  }
  while (tensor < archive.tensors.size() && row == archive.tensors[tensor].value.rows()) {
    ++tensor;
    row = 0;
  }
  if (tensor != archive.tensors.size()) throw ParseError(path.string() + ": truncated data section");
  return archive;
}

}  // namespace riskprop::nn
