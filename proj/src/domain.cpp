#include "cutfv/domain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "cutfv/linalg.hpp"

namespace cutfv {

namespace {

// Polyline sample of a curve used by the intersection safety checks.
struct SampledSeg {
  Vec2 a, b;
  int curve;
  double s;  // parameter at the segment start, in piece units
};

bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  auto orient = [](Vec2 p, Vec2 q, Vec2 r) {
    double v = (q - p).cross(r - p);
    return v > 0 ? 1 : (v < 0 ? -1 : 0);
  };
  int o1 = orient(a, b, c), o2 = orient(a, b, d);
  int o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

std::vector<SampledSeg> sample_curve(const Curve& c, int curve_id, int per_piece) {
  std::vector<SampledSeg> out;
  out.reserve(c.piece_count() * per_piece);
  Vec2 prev = c.piece(0).point(0.0);
  for (int k = 0; k < c.piece_count(); ++k)
    for (int i = 1; i <= per_piece; ++i) {
      Vec2 p = c.piece(k).point(static_cast<double>(i) / per_piece);
      out.push_back({prev, p, curve_id, k + static_cast<double>(i - 1) / per_piece});
      prev = p;
    }
  return out;
}

// Detects crossings among sampled segments with a uniform spatial hash.
// Segments closer than min_gap in curve parameter (piece units, wrap-aware)
// on the same curve are considered adjacent and skipped.
void check_no_intersections(const std::vector<SampledSeg>& segs,
                            const std::vector<int>& piece_counts) {
  double cell = 0.0;
  for (const auto& s : segs) cell = std::max(cell, (s.b - s.a).norm());
  if (cell == 0.0) return;
  cell *= 2.0;
  auto key = [&](int ix, int iy) {
    return (static_cast<long long>(ix) << 32) ^ (iy & 0xffffffffLL);
  };
  std::unordered_map<long long, std::vector<int>> hash;
  for (int idx = 0; idx < static_cast<int>(segs.size()); ++idx) {
    const auto& s = segs[idx];
    int x0 = static_cast<int>(std::floor(std::min(s.a.x, s.b.x) / cell));
    int x1 = static_cast<int>(std::floor(std::max(s.a.x, s.b.x) / cell));
    int y0 = static_cast<int>(std::floor(std::min(s.a.y, s.b.y) / cell));
    int y1 = static_cast<int>(std::floor(std::max(s.a.y, s.b.y) / cell));
    for (int ix = x0; ix <= x1; ++ix)
      for (int iy = y0; iy <= y1; ++iy) hash[key(ix, iy)].push_back(idx);
  }
  for (const auto& [k, bucket] : hash) {
    for (size_t u = 0; u < bucket.size(); ++u)
      for (size_t v = u + 1; v < bucket.size(); ++v) {
        const auto& p = segs[bucket[u]];
        const auto& q = segs[bucket[v]];
        if (p.curve == q.curve) {
          double n = piece_counts[p.curve];
          double gap = std::abs(p.s - q.s);
          gap = std::min(gap, n - gap);
          if (gap < 1.5) continue;  // adjacent along the curve
          if (segments_cross(p.a, p.b, q.a, q.b))
            throw UnsupportedGeometry("curve intersects itself");
        } else {
          if (segments_cross(p.a, p.b, q.a, q.b))
            throw UnsupportedGeometry("curves intersect each other");
        }
      }
  }
}

}  // namespace

Domain::Domain(DomainSpec spec) : box_(spec.box), curves_(std::move(spec.curves)) {
  validate();
  cumlen_.resize(curves_.size());
  const auto& gl = linalg::gauss_legendre(8);
  for (size_t k = 0; k < curves_.size(); ++k) {
    const Curve& c = curves_[k];
    cumlen_[k].resize(c.piece_count() + 1);
    cumlen_[k][0] = 0.0;
    for (int j = 0; j < c.piece_count(); ++j) {
      double len = 0.0;
      for (size_t q = 0; q < gl.node.size(); ++q) {
        double t = 0.5 * (gl.node[q] + 1.0);
        len += 0.5 * gl.weight[q] * c.piece(j).derivative(t).norm();
      }
      cumlen_[k][j + 1] = cumlen_[k][j] + len;
    }
  }
}

void Domain::validate() const {
  if (!(box_.x1 > box_.x0) || !(box_.y1 > box_.y0))
    throw UnsupportedGeometry("bounding box is empty");
  const double diag = box_.diagonal();
  for (size_t k = 0; k < curves_.size(); ++k) {
    const Curve& c = curves_[k];
    // Closure to 1e-13 of the box diagonal.
    for (int j = 0; j < c.piece_count(); ++j) {
      Vec2 e = c.piece(j).point(1.0);
      Vec2 s = c.piece((j + 1) % c.piece_count()).point(0.0);
      if ((e - s).norm() > 1e-13 * diag)
        throw UnsupportedGeometry("curve is not closed");
    }
    // Strictly inside the rectangle; tangential box contact is rejected too.
    const BBox& bb = c.bbox();
    if (!(bb.xmin > box_.x0 && bb.xmax < box_.x1 && bb.ymin > box_.y0 &&
          bb.ymax < box_.y1))
      throw UnsupportedGeometry("curve reaches the bounding box");
  }
  // Self- and mutual-intersection safety net on polyline samples.
  std::vector<SampledSeg> segs;
  std::vector<int> piece_counts;
  for (size_t k = 0; k < curves_.size(); ++k) {
    auto s = sample_curve(curves_[k], static_cast<int>(k), 4);
    segs.insert(segs.end(), s.begin(), s.end());
    piece_counts.push_back(curves_[k].piece_count());
  }
  if (!segs.empty()) check_no_intersections(segs, piece_counts);
  // No curve may sit in the excluded side of another: every fluid region
  // boundary must border actual fluid.
  for (size_t k = 0; k < curves_.size(); ++k)
    for (size_t m = 0; m < curves_.size(); ++m) {
      if (k == m) continue;
      Vec2 probe = curves_[k].point_at(0.37);
      if (!curves_[m].fluid_side_contains(probe))
        throw UnsupportedGeometry("curve lies inside the excluded side of another");
    }
}

bool Domain::contains(Vec2 p) const {
  if (!(p.x > box_.x0 && p.x < box_.x1 && p.y > box_.y0 && p.y < box_.y1)) return false;
  for (const Curve& c : curves_)
    if (!c.fluid_side_contains(p)) return false;
  return true;
}

double Domain::arc_length_at(int k, double s) const {
  const Curve& c = curves_[k];
  double u = (s - std::floor(s)) * c.piece_count();
  int j = std::min(static_cast<int>(u), c.piece_count() - 1);
  double frac = u - j;
  // Linear within a piece is plenty for ordering purposes.
  return cumlen_[k][j] + frac * (cumlen_[k][j + 1] - cumlen_[k][j]);
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

namespace {

std::map<std::string, std::string> parse_kv(std::istringstream& line) {
  std::map<std::string, std::string> kv;
  std::string tok;
  while (line >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0)
      throw IoError("malformed key=value token '" + tok + "' in domain file");
    if (!kv.emplace(tok.substr(0, eq), tok.substr(eq + 1)).second)
      throw IoError("domain file: duplicate key '" + tok.substr(0, eq) + "'");
  }
  return kv;
}

void check_keys(const std::map<std::string, std::string>& kv,
                std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : kv) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || (k == a);
    if (!ok) throw IoError("domain file: unknown key '" + k + "'");
  }
}

double need_num(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw IoError("domain file: missing key '" + key + "'");
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(it->second, &pos);
  } catch (const std::exception&) {
    throw IoError("domain file: bad number for '" + key + "'");
  }
  if (pos != it->second.size()) throw IoError("domain file: bad number for '" + key + "'");
  return v;
}

double opt_num(const std::map<std::string, std::string>& kv, const std::string& key,
               double dflt) {
  return kv.count(key) ? need_num(kv, key) : dflt;
}

bool need_keep_exterior(const std::map<std::string, std::string>& kv) {
  auto it = kv.find("keep");
  if (it == kv.end()) throw IoError("domain file: curve missing keep=");
  if (it->second == "exterior") return true;
  if (it->second == "interior") return false;
  throw IoError("domain file: keep must be interior or exterior");
}

}  // namespace

Domain parse_domain(const std::string& text) {
  DomainSpec spec;
  bool have_box = false;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream line(raw);
    std::string head;
    if (!(line >> head)) continue;
    if (head == "box") {
      auto kv = parse_kv(line);
      check_keys(kv, {"x0", "y0", "x1", "y1"});
      spec.box = {need_num(kv, "x0"), need_num(kv, "y0"), need_num(kv, "x1"),
                  need_num(kv, "y1")};
      have_box = true;
    } else if (head == "curve") {
      auto kv = parse_kv(line);
      auto kind = kv.find("kind");
      if (kind == kv.end()) throw IoError("domain file: curve missing kind=");
      if (kind->second == "flower") {
        check_keys(kv, {"kind", "cx", "cy", "r0", "amp", "freq", "keep"});
        spec.curves.push_back(Curve::flower(
            {opt_num(kv, "cx", 0.0), opt_num(kv, "cy", 0.0)}, need_num(kv, "r0"),
            need_num(kv, "amp"), static_cast<int>(need_num(kv, "freq")),
            need_keep_exterior(kv)));
      } else if (kind->second == "ellipse") {
        check_keys(kv, {"kind", "cx", "cy", "a", "b", "keep"});
        spec.curves.push_back(Curve::ellipse({need_num(kv, "cx"), need_num(kv, "cy")},
                                             need_num(kv, "a"), need_num(kv, "b"),
                                             need_keep_exterior(kv)));
      } else if (kind->second == "polygon") {
        check_keys(kv, {"kind", "points", "keep"});
        auto pts_it = kv.find("points");
        if (pts_it == kv.end()) throw IoError("domain file: polygon missing points=");
        std::vector<Vec2> pts;
        std::istringstream ps(pts_it->second);
        std::string pair;
        while (std::getline(ps, pair, ';')) {
          auto comma = pair.find(',');
          if (comma == std::string::npos)
            throw IoError("domain file: polygon point needs x,y");
          try {
            pts.push_back({std::stod(pair.substr(0, comma)),
                           std::stod(pair.substr(comma + 1))});
          } catch (const std::exception&) {
            throw IoError("domain file: bad polygon coordinate");
          }
        }
        spec.curves.push_back(Curve::polygon(pts, !need_keep_exterior(kv)));
      } else {
        throw IoError("domain file: unknown curve kind '" + kind->second + "'");
      }
    } else {
      throw IoError("domain file line " + std::to_string(lineno) +
                    ": unknown record '" + head + "'");
    }
  }
  if (!have_box) throw IoError("domain file: missing box record");
  return Domain(std::move(spec));
}

Domain load_domain(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open domain file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_domain(ss.str());
}

}  // namespace cutfv
