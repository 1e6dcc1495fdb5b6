#include "cci/svg_plot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cci {

namespace {

constexpr double kAxisLeft = 10.0;
constexpr double kAxisWidth = 380.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

double to_x(double p) { return kAxisLeft + kAxisWidth * std::clamp(p, 0.0, 1.0); }

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view text, double& out) {
  const std::string s(text);
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// One row's shapes, offset vertically by y0.
void append_row(std::ostringstream& s, const PredictionRow& row, double y0) {
  const double mid = to_x(0.5);
  s << "  <g transform=\"translate(0," << fmt(y0) << ")\">\n";
  s << "    <title>" << xml_escape(row.participant_id) << ' ' << format_date(row.date) << ' '
    << to_string(row.outcome) << "</title>\n";
  s << "    <rect class=\"negative\" x=\"" << fmt(kAxisLeft) << "\" y=\"20.00\" width=\"" << fmt(mid - kAxisLeft)
    << "\" height=\"20.00\" fill=\"" << kNegativeColor << "\" fill-opacity=\"0.35\"/>\n";
  s << "    <rect class=\"positive\" x=\"" << fmt(mid) << "\" y=\"20.00\" width=\"" << fmt(to_x(1.0) - mid)
    << "\" height=\"20.00\" fill=\"" << kPositiveColor << "\" fill-opacity=\"0.35\"/>\n";
  const double lo = to_x(row.interval.lo);
  const double hi = to_x(row.interval.hi);
  s << "    <rect class=\"band\" x=\"" << fmt(lo) << "\" y=\"24.00\" width=\"" << fmt(hi - lo)
    << "\" height=\"12.00\" fill=\"" << kBandColor << "\" fill-opacity=\"0.8\"/>\n";
  const double tick = to_x(row.p_hat);
  s << "    <line class=\"tick\" x1=\"" << fmt(tick) << "\" y1=\"14.00\" x2=\"" << fmt(tick)
    << "\" y2=\"46.00\" stroke=\"" << kTickColor << "\" stroke-width=\"2\"/>\n";
  s << "    <line class=\"axis\" x1=\"" << fmt(kAxisLeft) << "\" y1=\"40.00\" x2=\"" << fmt(to_x(1.0))
    << "\" y2=\"40.00\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  s << "    <text x=\"" << fmt(kAxisLeft) << "\" y=\"54.00\" font-size=\"9\">0</text>\n";
  s << "    <text x=\"" << fmt(mid - 6.0) << "\" y=\"54.00\" font-size=\"9\">0.5</text>\n";
  s << "    <text x=\"" << fmt(to_x(1.0) - 4.0) << "\" y=\"54.00\" font-size=\"9\">1</text>\n";
  s << "  </g>\n";
}

std::string document(std::span<const PredictionRow> rows) {
  const int height = kPlotRowHeight * static_cast<int>(std::max<std::size_t>(rows.size(), 1));
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kPlotWidth << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << kPlotWidth << ' ' << height << "\">\n";
  for (std::size_t i = 0; i < rows.size(); ++i) append_row(s, rows[i], static_cast<double>(i) * kPlotRowHeight);
  s << "</svg>\n";
  return s.str();
}

}  // namespace

void write_predictions_csv(std::ostream& out, std::span<const PredictionRow> rows) {
  out << kPredictionsHeader << '\n';
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f", r.p_hat, r.interval.lo, r.interval.hi);
    out << r.participant_id << ',' << format_date(r.date) << ',' << buf << ',' << to_string(r.outcome) << ','
        << r.label << '\n';
  }
}

void write_predictions_csv(const std::filesystem::path& path, std::span<const PredictionRow> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_predictions_csv(out, rows);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<PredictionRow> read_predictions_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::vector<PredictionRow> rows;
  std::vector<std::size_t> bad;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != kPredictionsHeader) throw PredictionsFormatError("predictions: missing header", {line_no});
      header = true;
      continue;
    }
    const auto f = split_commas(line);
    PredictionRow r;
    bool ok = f.size() == 7 && !f[0].empty();
    std::optional<Date> date;
    std::optional<Outcome> outcome;
    if (ok) {
      r.participant_id = std::string(f[0]);
      date = parse_date(f[1]);
      outcome = parse_outcome(f[5]);
      ok = date && outcome && parse_double(f[2], r.p_hat) && parse_double(f[3], r.interval.lo) &&
           parse_double(f[4], r.interval.hi) && (f[6] == "0" || f[6] == "1");
    }
    if (ok) {
      ok = r.p_hat >= 0.0 && r.p_hat <= 1.0 && r.interval.lo >= 0.0 && r.interval.lo <= r.interval.hi &&
           r.interval.hi <= 1.0;
    }
    if (!ok) {
      bad.push_back(line_no);
      continue;
    }
    r.date = *date;
    r.outcome = *outcome;
    r.label = f[6] == "1" ? 1 : 0;
    rows.push_back(std::move(r));
  }
  if (!header) throw PredictionsFormatError("predictions: missing header", {});
  if (!bad.empty()) {
    std::string msg = "malformed prediction rows at lines";
    for (auto n : bad) msg += ' ' + std::to_string(n);
    throw PredictionsFormatError(msg, std::move(bad));
  }
  return rows;
}

std::vector<PredictionRow> read_predictions_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_predictions_csv(in);
}

std::string render_interval_svg(const PredictionRow& row) { return document(std::span(&row, 1)); }

std::string render_strip_svg(std::span<const PredictionRow> rows) { return document(rows); }

std::vector<std::filesystem::path> write_interval_plots(std::span<const PredictionRow> rows,
                                                        const std::filesystem::path& out_dir,
                                                        const std::string& stem) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::filesystem::path& path, const std::string& svg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << svg;
    written.push_back(path);
  };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "_%03zu.svg", i);
    emit(out_dir / (stem + name), render_interval_svg(rows[i]));
  }
  emit(out_dir / (stem + "_strip.svg"), render_strip_svg(rows));
  return written;
}

}  // namespace cci
