#include "mblab/core/dataset_csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <system_error>

namespace mblab {
namespace {

constexpr std::array<const char*, 20> kColumns = {
    "episode",    "step",      "x_base",       "y_base",   "theta_base", "vx_base",  "vy_base",
    "omega_base", "x_ee",      "y_ee",         "z_ee",     "vx_ee",      "vy_ee",    "vz_ee",
    "u_vx_base",  "u_vy_base", "u_omega_base", "u_vx_ee",  "u_vy_ee",    "u_vz_ee"};

void write_row(std::ostream& out, std::int64_t episode, std::int64_t step, const RobotState& s,
               const Action* u) {
  out << episode << ',' << step;
  for (double v : s.to_array()) out << ',' << format_double(v);
  if (u != nullptr) {
    for (double v : u->to_array()) out << ',' << format_double(v);
  } else {
    out << ",,,,,,";
  }
  out << '\n';
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    cells.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

std::int64_t parse_int(std::string_view text) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
  }
  return v;
}

struct Row {
  std::int64_t episode;
  std::int64_t step;
  RobotState s;
  bool has_action;
  Action u;
};

}  // namespace

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return v;
}

void write_transitions_csv(std::ostream& out, std::span<const Transition> transitions) {
  for (std::size_t i = 0; i < kColumns.size(); ++i) out << (i ? "," : "") << kColumns[i];
  out << '\n';
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const Transition& tr = transitions[i];
    write_row(out, tr.episode, tr.step, tr.s, &tr.u);
    const bool last_of_episode =
        i + 1 == transitions.size() || transitions[i + 1].episode != tr.episode ||
        !(transitions[i + 1].s == tr.s_next);
    if (last_of_episode) write_row(out, tr.episode, tr.step + 1, tr.s_next, nullptr);
  }
}

void write_transitions_csv(const std::string& path, std::span<const Transition> transitions) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_transitions_csv(out, transitions);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<Transition> read_transitions_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("transition csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.size() != kColumns.size()) throw std::runtime_error("transition csv: bad header");
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    if (header[i] != kColumns[i]) {
      throw std::runtime_error("transition csv: expected column '" + std::string(kColumns[i]) +
                               "', got '" + std::string(header[i]) + "'");
    }
  }

  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      const auto cells = split(line);
      if (cells.size() != kColumns.size()) throw std::invalid_argument("wrong column count");
      Row row{};
      row.episode = parse_int(cells[0]);
      row.step = parse_int(cells[1]);
      std::array<double, kStateDim> s{};
      for (std::size_t j = 0; j < kStateDim; ++j) s[j] = parse_double(cells[2 + j]);
      row.s = RobotState::from_array(s);
      row.has_action = !cells[14].empty();
      if (row.has_action) {
        std::array<double, kActionDim> u{};
        for (std::size_t j = 0; j < kActionDim; ++j) u[j] = parse_double(cells[14 + j]);
        row.u = Action::from_array(u);
      }
      rows.push_back(row);
    } catch (const std::exception& e) {
      throw std::runtime_error("transition csv line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  std::vector<Transition> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    if (!r.has_action) continue;
    if (i + 1 >= rows.size() || rows[i + 1].episode != r.episode || rows[i + 1].step != r.step + 1) {
      throw std::runtime_error("transition csv: row for episode " + std::to_string(r.episode) +
                               " step " + std::to_string(r.step) + " has no successor state");
    }
    out.push_back(Transition{r.s, r.u, rows[i + 1].s, r.episode, r.step});
  }
  return out;
}

std::vector<Transition> read_transitions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_transitions_csv(in);
}

}  // namespace mblab
