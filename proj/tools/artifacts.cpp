#include "artifacts.hpp"

#include <charconv>
#include <fstream>

namespace cguide::cli {

RunDir::RunDir(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw ConfigError("--out: cannot create " + root_.string() + ": " + ec.message());
}

namespace {

std::ofstream open_file(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  return os;
}

}  // namespace

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void RunDir::write_config(const nlohmann::json& config) const { open_file(root_ / "config.json") << config.dump(2) << '\n'; }

void RunDir::write_seed(std::uint64_t seed) const { open_file(root_ / "seed.txt") << seed << '\n'; }

void RunDir::write_metrics(const nlohmann::json& metrics) const {
  open_file(root_ / "metrics.json") << metrics.dump(2) << '\n';
}

void RunDir::write_samples(const Matrix& samples, const std::vector<std::string>& tag_names,
                           const std::vector<std::vector<std::string>>& tags, const std::string& name) const {
  auto os = open_file(root_ / name);
  for (const auto& t : tag_names) os << t << ',';
  for (Eigen::Index j = 0; j < samples.cols(); ++j) os << (j ? "," : "") << 'x' << j;
  os << '\n';
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    if (!tag_names.empty())
      for (const auto& t : tags.at(static_cast<size_t>(i))) os << t << ',';
    for (Eigen::Index j = 0; j < samples.cols(); ++j) os << (j ? "," : "") << num(samples(i, j));
    os << '\n';
  }
}

void RunDir::write_text(const std::string& name, const std::string& text) const { open_file(root_ / name) << text; }

}  // namespace cguide::cli
