#include "magwell/benchlib.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace magwell {

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

Config Config::parse_string(const std::string& text) {
  Config c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(ss, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + " is not key = value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    c.kv_[key] = val;
  }
  return c;
}

Config Config::defaults_for(const std::string& experiment) {
  Config c;
  c.set("experiment", experiment);
  return c;
}

std::string Config::get(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& dflt) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? dflt : it->second;
}

double Config::get_double(const std::string& key) const {
  try {
    return std::stod(get(key));
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    throw ConfigError("config key is not a number: " + key);
  }
}

double Config::get_double_or(const std::string& key, double dflt) const {
  return has(key) ? get_double(key) : dflt;
}

int Config::get_int(const std::string& key) const {
  try {
    return std::stoi(get(key));
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    throw ConfigError("config key is not an integer: " + key);
  }
}

int Config::get_int_or(const std::string& key, int dflt) const {
  return has(key) ? get_int(key) : dflt;
}

uint64_t Config::get_seed(uint64_t dflt) const {
  if (!has("seed")) return dflt;
  try {
    return std::stoull(get("seed"));
  } catch (...) {
    throw ConfigError("config key is not a seed: seed");
  }
}

std::vector<double> Config::get_list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get(key));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (...) {
      throw ConfigError("config list entry is not a number in key: " + key);
    }
  }
  if (out.empty()) throw ConfigError("config list is empty: " + key);
  return out;
}

std::vector<double> Config::get_list_or(const std::string& key,
                                        const std::vector<double>& dflt) const {
  return has(key) ? get_list(key) : dflt;
}

std::vector<int> Config::get_int_list_or(const std::string& key,
                                         const std::vector<int>& dflt) const {
  if (!has(key)) return dflt;
  std::vector<int> out;
  for (double v : get_list(key)) out.push_back(static_cast<int>(std::llround(v)));
  return out;
}

std::string format_g17(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0.0 || y[i] <= 0.0) continue;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return linear_fit(lx, ly).first;
}

std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit needs >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  size_t n = x.size();
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) throw std::runtime_error("degenerate fit");
  double slope = (n * sxy - sx * sy) / denom;
  double intercept = (sy - slope * sx) / n;
  return {slope, intercept};
}

void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("atomic rename failed for " + path);
}

void SvgPlot::polyline(const std::vector<Vec2>& pts, const std::string& color, double stroke) {
  if (pts.size() < 2) return;
  std::ostringstream os;
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << stroke
     << "\" points=\"";
  char buf[64];
  for (const Vec2& p : pts) {
    double px = (p.x() - xmin) / (xmax - xmin) * width;
    double py = height - (p.y() - ymin) / (ymax - ymin) * height;
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px, py);
    os << buf;
  }
  os << "\"/>\n";
  body += os.str();
}

void SvgPlot::circle(const Vec2& c, double r_px, const std::string& color) {
  double px = (c.x() - xmin) / (xmax - xmin) * width;
  double py = height - (c.y() - ymin) / (ymax - ymin) * height;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.1f\" fill=\"%s\"/>\n", px,
                py, r_px, color.c_str());
  body += buf;
}

std::string SvgPlot::render(const std::string& title) const {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"10\" y=\"18\" font-family=\"monospace\" font-size=\"13\">" << title
     << "</text>\n";
  os << body;
  os << "</svg>\n";
  return os.str();
}

Box box_from_config(const Config& cfg, Box dflt) {
  if (!cfg.has("box")) return dflt;
  auto v = cfg.get_list("box");
  if (v.size() != 2 || !(v[0] < v[1])) throw ConfigError("box must be lo,hi with lo < hi");
  return Box{v[0], v[1]};
}

}  // namespace magwell
