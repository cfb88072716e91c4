#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace sdlt::cli {

enum class Format { Json, Csv, Both };

struct Invocation {
  std::string command;  // ba-check | pow-estimate | pos-attack | run
  std::filesystem::path config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::filesystem::path out_dir = "out";
  Format format = Format::Both;
  bool force = false;
};

/// Exit statuses shared by every command.
inline constexpr int kPass = 0;
inline constexpr int kFail = 1;
inline constexpr int kUsage = 2;

int cmd_ba_check(const Invocation& inv, std::ostream& out, std::ostream& err);
int cmd_pow_estimate(const Invocation& inv, std::ostream& out, std::ostream& err);
int cmd_pos_attack(const Invocation& inv, std::ostream& out, std::ostream& err);
int cmd_run(const Invocation& inv, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches. Usage and config errors return kUsage.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sdlt::cli
