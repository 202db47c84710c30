#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "contact_replay/errors.hpp"
#include "contact_replay/harness.hpp"

namespace contact_replay {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ||
                    c == '-' || c == '=';
    out += ok ? c : '_';
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> f;
  std::istringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) f.push_back(field);
  return f;
}

}  // namespace

double quantile(std::vector<double> values, double q) {
  require(!values.empty(), "quantile of an empty sample");
  require(q >= 0.0 && q <= 1.0, "quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

CurveSummary summarize(std::string label, const std::vector<MetricsRow>& rows) {
  std::map<std::size_t, std::vector<double>> by_epoch;
  std::map<std::uint64_t, int> seeds;
  for (const MetricsRow& r : rows) {
    by_epoch[r.epoch].push_back(r.success_rate);
    seeds[r.seed] = 1;
  }
  CurveSummary c;
  c.label = std::move(label);
  c.seeds = seeds.size();
  for (const auto& [epoch, values] : by_epoch) {
    c.epochs.push_back(epoch);
    c.median.push_back(quantile(values, 0.5));
    c.q25.push_back(quantile(values, 0.25));
    c.q75.push_back(quantile(values, 0.75));
  }
  return c;
}

std::optional<std::size_t> first_crossing(const CurveSummary& curve, double threshold) {
  for (std::size_t i = 0; i < curve.epochs.size(); ++i) {
    if (curve.median[i] >= threshold) return curve.epochs[i];
  }
  return std::nullopt;
}

void write_sweep_csv(std::ostream& out, const std::string& parameter,
                     const std::vector<CurveSummary>& curves) {
  out << kSweepHeader << '\n';
  for (const CurveSummary& c : curves) {
    for (std::size_t i = 0; i < c.epochs.size(); ++i) {
      out << parameter << ',' << c.label << ',' << c.epochs[i] << ',' << num(c.median[i]) << ','
          << num(c.q25[i]) << ',' << num(c.q75[i]) << ',' << c.seeds << '\n';
    }
  }
}

std::vector<CurveSummary> sweep(const RunConfig& base, const std::string& parameter,
                                const std::vector<std::string>& values, std::ostream* log) {
  const auto& keys = config_keys();
  if (std::find(keys.begin(), keys.end(), parameter) == keys.end()) {
    std::string valid;
    for (const auto& k : keys) valid += "\n  " + k;
    throw ConfigError("unknown sweep parameter '" + parameter + "'; valid keys:" + valid);
  }
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  for (const auto& v : values) {
    if (v.find(',') != std::string::npos) {
      throw ConfigError("sweep values must not contain commas ('" + v + "')");
    }
  }

  std::vector<CurveSummary> curves;
  for (const std::string& value : values) {
    ConfigMap map = base.to_map();
    map[parameter] = value;
    // Keep the base output directory unless the sweep is over it.
    RunConfig cfg = parse_run_config(map);
    if (parameter != "run.output_dir") {
      cfg.output_dir = base.output_dir / sanitize(parameter + "=" + value);
    }
    if (log) *log << "sweep " << parameter << " = " << value << '\n';
    const std::vector<MetricsRow> rows = train(cfg, log);
    curves.push_back(summarize(value, rows));
  }

  std::filesystem::create_directories(base.output_dir);
  std::ofstream out(base.output_dir / "sweep.csv", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (base.output_dir / "sweep.csv").string());
  write_sweep_csv(out, parameter, curves);
  if (!out) throw IoError("failed writing sweep.csv");
  return curves;
}

std::vector<CurveSummary> load_curves(const std::filesystem::path& path,
                                      const std::string& label) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  in.close();
  if (header == kMetricsHeader) return {summarize(label, read_metrics_csv(path))};
  if (header != kSweepHeader) {
    throw IoError(path.string() + ": neither a metrics nor a sweep CSV");
  }

  std::ifstream again(path);
  std::getline(again, header);
  std::vector<CurveSummary> curves;
  std::map<std::string, std::size_t> index;
  std::string line;
  while (std::getline(again, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 7) throw IoError(path.string() + ": malformed sweep row");
    auto [it, inserted] = index.try_emplace(f[1], curves.size());
    if (inserted) {
      curves.push_back({});
      curves.back().label = f[1];
    }
    CurveSummary& c = curves[it->second];
    try {
      c.epochs.push_back(std::stoull(f[2]));
      c.median.push_back(std::stod(f[3]));
      c.q25.push_back(std::stod(f[4]));
      c.q75.push_back(std::stod(f[5]));
      c.seeds = std::stoull(f[6]);
    } catch (const std::exception&) {
      throw IoError(path.string() + ": malformed number in sweep row");
    }
  }
  return curves;
}

void plot_svg(const std::vector<CurveSummary>& curves, std::ostream& out,
              const std::string& title) {
  if (curves.empty()) throw ConfigError("plot: no curves");
  for (const CurveSummary& c : curves) {
    if (c.epochs.empty()) throw ConfigError("plot: curve '" + c.label + "' has no epochs");
    if (c.epochs != curves.front().epochs) {
      throw ConfigError("plot: curve '" + c.label + "' does not share the epoch axis of '" +
                        curves.front().label + "'");
    }
  }
  static constexpr std::array<const char*, 8> kColors = {
      "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  static constexpr std::array<const char*, 4> kDashes = {"", "6,3", "2,2", "8,3,2,3"};

  const double width = 720.0;
  const double height = 440.0;
  const double left = 70.0;
  const double right = 20.0;
  const double top = 40.0;
  const double bottom = 50.0;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  const auto& epochs = curves.front().epochs;
  const double x0 = static_cast<double>(epochs.front());
  double x1 = static_cast<double>(epochs.back());
  if (x1 <= x0) x1 = x0 + 1.0;
  auto sx = [&](double e) { return left + (e - x0) / (x1 - x0) * plot_w; };
  auto sy = [&](double v) { return top + (1.0 - std::clamp(v, 0.0, 1.0)) * plot_h; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << px(width / 2) << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << xml_escape(title) << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    out << "<line x1=\"" << px(left) << "\" y1=\"" << px(sy(v)) << "\" x2=\""
        << px(left + plot_w) << "\" y2=\"" << px(sy(v))
        << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << px(left - 8) << "\" y=\"" << px(sy(v) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(v)
        << "</text>\n";
  }
  const std::size_t tick_every = std::max<std::size_t>(1, epochs.size() / 10);
  for (std::size_t i = 0; i < epochs.size(); i += tick_every) {
    const double x = sx(static_cast<double>(epochs[i]));
    out << "<text x=\"" << px(x) << "\" y=\"" << px(top + plot_h + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << epochs[i] << "</text>\n";
  }
  out << "<rect x=\"" << px(left) << "\" y=\"" << px(top) << "\" width=\"" << px(plot_w)
      << "\" height=\"" << px(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << px(left + plot_w / 2) << "\" y=\"" << px(height - 10)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">epoch</text>\n";
  out << "<text transform=\"translate(18," << px(top + plot_h / 2)
      << ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">success rate</text>\n";

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const CurveSummary& c = curves[k];
    const char* color = kColors[k % kColors.size()];
    out << "<polygon class=\"iqr\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < c.epochs.size(); ++i) {
      out << px(sx(static_cast<double>(c.epochs[i]))) << ',' << px(sy(c.q75[i])) << ' ';
    }
    for (std::size_t i = c.epochs.size(); i-- > 0;) {
      out << px(sx(static_cast<double>(c.epochs[i]))) << ',' << px(sy(c.q25[i])) << ' ';
    }
    out << "\"/>\n";
    out << "<polyline class=\"median\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\"";
    const char* dash = kDashes[(k / kColors.size() + k) % kDashes.size()];
    if (*dash) out << " stroke-dasharray=\"" << dash << "\"";
    out << " points=\"";
    for (std::size_t i = 0; i < c.epochs.size(); ++i) {
      out << px(sx(static_cast<double>(c.epochs[i]))) << ',' << px(sy(c.median[i])) << ' ';
    }
    out << "\"/>\n";

    const double ly = top + 14.0 + 18.0 * static_cast<double>(k);
    out << "<line x1=\"" << px(left + 12) << "\" y1=\"" << px(ly) << "\" x2=\"" << px(left + 40)
        << "\" y2=\"" << px(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"";
    if (*dash) out << " stroke-dasharray=\"" << dash << "\"";
    out << "/>\n";
    out << "<text class=\"legend\" x=\"" << px(left + 46) << "\" y=\"" << px(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(c.label)
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace contact_replay
