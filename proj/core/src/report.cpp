#include "ulbench/report.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ulbench {

namespace {

using nlohmann::json;

const std::vector<std::string> kMiaColumns = {
    "correctness", "confidence", "entropy", "m_entropy", "prob_vector"};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

double parse_double(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

}  // namespace

std::string MetricsReport::cell_key() const {
  return method_id + "|" + scenario + "|" + std::to_string(budget) + "|" +
         std::to_string(seed);
}

const std::string& report_csv_header() {
  static const std::string header = [] {
    std::string h =
        "method,scenario,target_class,budget,seed,status,error,ta,ra,fa_raw,"
        "fa_disc";
    for (const auto& k : kMiaColumns) h += ",mia_" + k;
    h += ",l2,rte_ratio,storage_bytes,wall_seconds,asr,duplicate";
    return h;
  }();
  return header;
}

std::string to_csv_row(const MetricsReport& r) {
  std::string out;
  out += csv_escape(r.method_id);
  out += ',' + csv_escape(r.scenario);
  out += ',' + (r.target_class ? std::to_string(*r.target_class) : std::string());
  out += ',' + std::to_string(r.budget);
  out += ',' + std::to_string(r.seed);
  out += ',' + std::string(r.ok ? "ok" : "failed");
  out += ',' + csv_escape(r.error);
  out += ',' + fmt_double(r.ta);
  out += ',' + fmt_double(r.ra);
  out += ',' + fmt_double(r.fa_raw);
  out += ',' + fmt_double(r.fa_disc);
  for (const auto& k : kMiaColumns) {
    const auto it = r.mia.find(k);
    out += ',' + (it == r.mia.end() ? std::string() : fmt_double(it->second));
  }
  out += ',' + fmt_double(r.l2);
  out += ',' + fmt_double(r.rte_ratio);
  out += ',' + std::to_string(r.storage_bytes);
  out += ',' + fmt_double(r.wall_seconds);
  out += ',' + (r.asr ? fmt_double(*r.asr) : std::string());
  out += ',' + std::string(r.duplicate ? "1" : "0");
  return out;
}

MetricsReport parse_csv_row(const std::string& line) {
  const auto f = csv_split(line);
  const std::size_t expected = 17 + kMiaColumns.size();
  if (f.size() != expected)
    throw Error("results row: expected " + std::to_string(expected) +
                " fields, got " + std::to_string(f.size()));
  MetricsReport r;
  std::size_t i = 0;
  r.method_id = f[i++];
  r.scenario = f[i++];
  if (!f[i].empty()) r.target_class = std::stoi(f[i]);
  ++i;
  r.budget = static_cast<std::size_t>(std::stoull(f[i++]));
  r.seed = std::stoull(f[i++]);
  r.ok = f[i++] == "ok";
  r.error = f[i++];
  r.ta = parse_double(f[i++]);
  r.ra = parse_double(f[i++]);
  r.fa_raw = parse_double(f[i++]);
  r.fa_disc = parse_double(f[i++]);
  for (const auto& k : kMiaColumns) {
    if (!f[i].empty()) r.mia[k] = parse_double(f[i]);
    ++i;
  }
  r.l2 = parse_double(f[i++]);
  r.rte_ratio = parse_double(f[i++]);
  r.storage_bytes = std::stoull(f[i++]);
  r.wall_seconds = parse_double(f[i++]);
  if (!f[i].empty()) r.asr = parse_double(f[i]);
  ++i;
  r.duplicate = f[i++] == "1";
  return r;
}

std::string to_jsonl(const MetricsReport& r) {
  json j;
  j["method"] = r.method_id;
  j["scenario"] = r.scenario;
  if (r.target_class) j["target_class"] = *r.target_class;
  j["budget"] = r.budget;
  j["seed"] = r.seed;
  j["status"] = r.ok ? "ok" : "failed";
  if (!r.error.empty()) j["error"] = r.error;
  j["ta"] = r.ta;
  j["ra"] = r.ra;
  j["fa_raw"] = r.fa_raw;
  j["fa_disc"] = r.fa_disc;
  j["mia"] = r.mia;
  j["l2"] = r.l2;
  j["rte_ratio"] = r.rte_ratio;
  j["storage_bytes"] = r.storage_bytes;
  j["wall_seconds"] = r.wall_seconds;
  if (r.asr) j["asr"] = *r.asr;
  j["duplicate"] = r.duplicate;
  return j.dump();
}

MetricsReport from_jsonl(const std::string& line) {
  const json j = json::parse(line);
  MetricsReport r;
  r.method_id = j.at("method").get<std::string>();
  r.scenario = j.at("scenario").get<std::string>();
  if (j.contains("target_class")) r.target_class = j["target_class"].get<int>();
  r.budget = j.at("budget").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.ok = j.at("status").get<std::string>() == "ok";
  if (j.contains("error")) r.error = j["error"].get<std::string>();
  r.ta = j.at("ta").get<double>();
  r.ra = j.at("ra").get<double>();
  r.fa_raw = j.at("fa_raw").get<double>();
  r.fa_disc = j.at("fa_disc").get<double>();
  r.mia = j.at("mia").get<std::map<std::string, double>>();
  r.l2 = j.at("l2").get<double>();
  r.rte_ratio = j.at("rte_ratio").get<double>();
  r.storage_bytes = j.at("storage_bytes").get<std::uint64_t>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  if (j.contains("asr")) r.asr = j["asr"].get<double>();
  r.duplicate = j.at("duplicate").get<bool>();
  return r;
}

std::string emit_table(const std::vector<MetricsReport>& rows,
                       const std::string& scenario) {
  std::vector<const MetricsReport*> sel;
  for (const auto& r : rows)
    if (r.scenario == scenario && r.ok) sel.push_back(&r);
  std::stable_sort(sel.begin(), sel.end(),
                   [](const MetricsReport* a, const MetricsReport* b) {
                     const bool ra = a->method_id == "retrain";
                     const bool rb = b->method_id == "retrain";
                     if (ra != rb) return ra;
                     return a->method_id < b->method_id;
                   });
  const bool have_ref =
      std::any_of(sel.begin(), sel.end(), [](const MetricsReport* r) {
        return r->method_id == "retrain";
      });

  std::ostringstream os;
  os << "scenario: " << scenario << "\n";
  if (!have_ref)
    os << "warning: no retrain reference row; FA_disc and l2 are blank\n";
  char line[512];
  std::snprintf(line, sizeof(line),
                "%-16s %8s %8s %8s %8s %8s %8s %8s %8s %8s\n", "method", "TA",
                "RA", "FA_disc", "correct", "confid", "entropy", "m_entr",
                "probvec", "l2");
  os << line;
  const auto cell = [](double v) {
    char b[16];
    std::snprintf(b, sizeof(b), "%8.2f", v);
    return std::string(b);
  };
  for (const auto* r : sel) {
    const auto mia = [&](const std::string& k) {
      const auto it = r->mia.find(k);
      return it == r->mia.end() ? std::string(8, ' ') : cell(it->second);
    };
    char l2buf[16];
    if (have_ref)
      std::snprintf(l2buf, sizeof(l2buf), "%8.4f", r->l2);
    else
      std::snprintf(l2buf, sizeof(l2buf), "%8s", "-");
    std::string fa = have_ref ? cell(r->fa_disc) : std::string("       -");
    std::snprintf(line, sizeof(line), "%-16s %s %s %s %s %s %s %s %s %s\n",
                  r->method_id.c_str(), cell(r->ta).c_str(), cell(r->ra).c_str(),
                  fa.c_str(), mia("correctness").c_str(),
                  mia("confidence").c_str(), mia("entropy").c_str(),
                  mia("m_entropy").c_str(), mia("prob_vector").c_str(), l2buf);
    os << line;
  }
  return os.str();
}

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                          "#bcbd22", "#17becf"};

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series) {
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size())
      throw Error("plot: series '" + s.label + "' has mismatched x/y lengths");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        first = false;
      } else {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  const double W = 640, H = 420, ml = 60, mr = 140, mt = 40, mb = 50;
  const auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr);
  };
  const auto py = [&](double y) {
    return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb);
  };

  std::ofstream os(path);
  if (!os) throw Error("plot: cannot open " + path.string());
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
     << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        "font-size=\"16\">"
     << svg_escape(title) << "</text>\n";
  // Axes.
  os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
     << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
     << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\" font-size=\"12\">" << svg_escape(x_label)
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + H - mb) / 2
     << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
     << (mt + H - mb) / 2 << ")\">" << svg_escape(y_label) << "</text>\n";
  // Min/max tick labels.
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", xmin);
  os << "<text x=\"" << px(xmin) << "\" y=\"" << H - mb + 16
     << "\" text-anchor=\"middle\" font-size=\"11\">" << buf << "</text>\n";
  std::snprintf(buf, sizeof(buf), "%g", xmax);
  os << "<text x=\"" << px(xmax) << "\" y=\"" << H - mb + 16
     << "\" text-anchor=\"middle\" font-size=\"11\">" << buf << "</text>\n";
  std::snprintf(buf, sizeof(buf), "%g", ymin);
  os << "<text x=\"" << ml - 6 << "\" y=\"" << py(ymin) + 4
     << "\" text-anchor=\"end\" font-size=\"11\">" << buf << "</text>\n";
  std::snprintf(buf, sizeof(buf), "%g", ymax);
  os << "<text x=\"" << ml - 6 << "\" y=\"" << py(ymax) + 4
     << "\" text-anchor=\"end\" font-size=\"11\">" << buf << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(*kPalette))];
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << px(s.x[i]) << "," << py(s.y[i]) << " ";
    os << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
         << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    const double ly = mt + 16.0 * static_cast<double>(si);
    os << "<rect x=\"" << W - mr + 10 << "\" y=\"" << ly << "\" width=\"12\" "
       << "height=\"12\" fill=\"" << color << "\"/>\n";
    os << "<text x=\"" << W - mr + 26 << "\" y=\"" << ly + 10
       << "\" font-size=\"11\">" << svg_escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  if (!os) throw Error("plot: write failed for " + path.string());
}

void write_plot_csv(const std::filesystem::path& path,
                    const std::vector<PlotSeries>& series) {
  std::set<double> xs;
  for (const auto& s : series) xs.insert(s.x.begin(), s.x.end());
  std::ofstream os(path);
  if (!os) throw Error("plot: cannot open " + path.string());
  os << "x";
  for (const auto& s : series) os << "," << csv_escape(s.label);
  os << "\n";
  for (double x : xs) {
    os << fmt_double(x);
    for (const auto& s : series) {
      os << ",";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (s.x[i] == x) {
          os << fmt_double(s.y[i]);
          break;
        }
    }
    os << "\n";
  }
  if (!os) throw Error("plot: write failed for " + path.string());
}

}  // namespace ulbench
