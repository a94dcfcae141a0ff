#pragma once

// File output for CLI commands: CSV formatting, git-style content hashes
// and the run manifest.

#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gbcos/sphere.hpp"

namespace gbcos::cli {

/// Unreadable input or unwritable output; maps to exit status 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);

/// SHA-1 of "blob <size>\0<content>", as `git hash-object` prints it.
std::string git_blob_sha1(std::string_view content);

/// Shortest round-trip decimal form.
std::string format_double(double v);

/// Comma-separated text with a header row and LF line endings.
class CsvBuilder {
 public:
  explicit CsvBuilder(const std::vector<std::string>& header);

  CsvBuilder& cell(double v);
  CsvBuilder& cell(long long v);
  CsvBuilder& cell(std::string_view v);
  void end_row();

  const std::string& str() const noexcept { return text_; }

 private:
  std::string text_;
  bool row_open_ = false;
};

/// Header "id,x1..xd"; one row per embedding with its identity label.
std::string embeddings_csv(const SphereBatch& batch);

/// Same layout for prototype rows, labelled by their identity.
std::string prototypes_csv(const PrototypeMatrix& protos);

/// Parses embeddings_csv output (any dimension >= 2). Rows are
/// re-normalized; labels must be non-negative.
SphereBatch parse_embeddings_csv(std::string_view text);

/// Writes files under one directory and remembers their hashes.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);

  void write(const std::string& name, std::string_view content);
  const std::map<std::string, std::string>& hashes() const noexcept { return hashes_; }
  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
  std::map<std::string, std::string> hashes_;
};

/// JSON text with sorted keys and a trailing newline; indent < 0 gives one line.
std::string dump_json(const nlohmann::json& j, int indent = 2);

/// Writes run_manifest.json: the resolved config, input and output hashes.
void write_manifest(OutputDir& out, std::string_view command, const nlohmann::json& config,
                    const std::map<std::string, std::string>& inputs = {});

}  // namespace gbcos::cli
