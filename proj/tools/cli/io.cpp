#include "io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <iterator>
#include <system_error>

#include <openssl/evp.h>

#include "config.hpp"
#include "gbcos/error.hpp"

namespace gbcos::cli {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return text;
}

std::string git_blob_sha1(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest.data(), &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-1 digest failed");

  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

CsvBuilder::CsvBuilder(const std::vector<std::string>& header) {
  for (const auto& h : header) cell(h);
  end_row();
}

CsvBuilder& CsvBuilder::cell(double v) { return cell(std::string_view(format_double(v))); }

CsvBuilder& CsvBuilder::cell(long long v) { return cell(std::string_view(std::to_string(v))); }

CsvBuilder& CsvBuilder::cell(std::string_view v) {
  if (row_open_) text_.push_back(',');
  text_.append(v);
  row_open_ = true;
  return *this;
}

void CsvBuilder::end_row() {
  text_.push_back('\n');
  row_open_ = false;
}

namespace {

std::vector<std::string> id_header(std::size_t d) {
  std::vector<std::string> h{"id"};
  for (std::size_t k = 1; k <= d; ++k) h.push_back("x" + std::to_string(k));
  return h;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const auto pos = line.find(sep, begin);
    out.push_back(line.substr(begin, pos == std::string_view::npos ? std::string_view::npos : pos - begin));
    if (pos == std::string_view::npos) break;
    begin = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view field, std::size_t line_no) {
  T v{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "line " + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::string embeddings_csv(const SphereBatch& batch) {
  CsvBuilder csv(id_header(batch.dim()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    csv.cell(static_cast<long long>(batch.label(i)));
    for (double x : batch.row(i)) csv.cell(x);
    csv.end_row();
  }
  return csv.str();
}

std::string prototypes_csv(const PrototypeMatrix& protos) {
  CsvBuilder csv(id_header(protos.dim()));
  for (std::size_t i = 0; i < protos.size(); ++i) {
    csv.cell(static_cast<long long>(protos.labels()[i]));
    for (double x : protos.row(i)) csv.cell(x);
    csv.end_row();
  }
  return csv.str();
}

SphereBatch parse_embeddings_csv(std::string_view text) {
  std::vector<std::string_view> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  }
  if (lines.size() < 2) throw Error(ErrorCode::EmptyInput, "embeddings CSV has no data rows");

  const auto header = split(lines[0], ',');
  if (header.size() < 3 || header[0] != "id") {
    throw Error(ErrorCode::InvalidArgument, "embeddings CSV header must be id,x1,...,xd with d >= 2");
  }
  const std::size_t d = header.size() - 1;
  const std::size_t n = lines.size() - 1;

  RowMatrix raw(n, d);
  std::vector<int> labels(n);
  int max_label = -1;
  for (std::size_t r = 0; r < n; ++r) {
    const auto fields = split(lines[r + 1], ',');
    if (fields.size() != d + 1) {
      throw Error(ErrorCode::DimensionMismatch, "line " + std::to_string(r + 2) + ": expected " +
                                                    std::to_string(d + 1) + " fields");
    }
    labels[r] = parse_number<int>(fields[0], r + 2);
    if (labels[r] < 0) throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(r + 2) + ": negative id");
    max_label = std::max(max_label, labels[r]);
    for (std::size_t k = 0; k < d; ++k) raw(r, k) = parse_number<double>(fields[k + 1], r + 2);
  }
  return SphereBatch::from_raw(raw, std::move(labels), static_cast<std::size_t>(max_label) + 1);
}

OutputDir::OutputDir(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_)) throw IoError("cannot create output directory '" + root_.string() + "'");
}

void OutputDir::write(const std::string& name, std::string_view content) {
  const fs::path path = root_ / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
  hashes_[name] = git_blob_sha1(content);
}

std::string dump_json(const nlohmann::json& j, int indent) { return j.dump(indent) + "\n"; }

void write_manifest(OutputDir& out, std::string_view command, const nlohmann::json& config,
                    const std::map<std::string, std::string>& inputs) {
  nlohmann::json m;
  m["kind"] = std::string(kManifestKind);
  m["command"] = std::string(command);
  m["config"] = config;
  m["inputs"] = inputs;
  m["outputs"] = out.hashes();
  out.write("run_manifest.json", dump_json(m));
}

}  // namespace gbcos::cli
