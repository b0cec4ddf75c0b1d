#pragma once

#include "multibump/errors.hpp"

#include <json.hpp>

#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace multibump::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_input = 2,
  exit_certification = 3,
  exit_convergence = 4,
  exit_internal = 5,
};

int exit_code_for(ErrorClass cls);
/// Exit code for any exception escaping a subcommand.
int exit_code_for(const std::exception& e);

/// SHA-1 of "blob <size>\0" + content, as git hashes a file.
std::string git_blob_sha1(std::string_view content);
std::string file_blob_sha1(const std::filesystem::path& p);

/// Comma or space separated numbers; throws InputError.
std::vector<double> parse_number_list(const std::string& s);
std::vector<std::string> parse_word_list(const std::string& s);
/// points values from a to b, equally spaced in log; throws InputError.
std::vector<double> log_grid(double a, double b, int points);

struct JobRow {
  std::string symbols;
  double mu = 0.0;
  bool certified = false;
  std::string status;  // "certified", "uncertified" or the error name
  double residual = 0.0;
  double interior_max = 0.0;
  int minimal_period = 0;
  std::string message;
};

struct Bracket {
  std::string symbols;
  double mu_fail = 0.0;  // 0 when the smallest mu already passes
  double mu_pass = std::numeric_limits<double>::infinity();
};

/// (last fail below the first pass, first pass) over the rows of one symbol
/// string; (max mu, inf) when nothing passes.
Bracket bracket_for(const std::string& symbols, const std::vector<JobRow>& rows);

/// Written next to every run: config echo, input hashes, outputs, status.
class Manifest {
 public:
  explicit Manifest(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void set_command(const std::string& command, const nlohmann::json& config);
  void add_input(const std::string& role, const std::filesystem::path& p);
  void add_input_text(const std::string& role, std::string_view content);
  /// Writes `content` under the output directory and records its hash.
  std::filesystem::path write_output(const std::string& name, const std::string& content);
  void fail(const std::string& error_name, const std::string& message, int exit_code);
  /// Writes manifest.json; returns its path.
  std::filesystem::path finish();

  const nlohmann::json& data() const noexcept { return j_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  nlohmann::json j_ = {{"status", "ok"}, {"inputs", nlohmann::json::object()}, {"outputs", nlohmann::json::array()}};
};

/// Formats doubles for CSV with round-trip precision.
std::string fmt(double x);

/// Entry point of the multibump tool.
int run(int argc, char** argv);

}  // namespace multibump::cli
