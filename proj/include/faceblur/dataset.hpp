#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <istream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "faceblur/geometry.hpp"
#include "faceblur/imaging.hpp"

namespace faceblur {

enum class corpus { fddb, wider };
enum class split { train, val };

inline std::string_view to_string(corpus c) { return c == corpus::fddb ? "fddb" : "wider"; }
inline std::string_view to_string(split s) { return s == split::train ? "train" : "val"; }

struct annotated_frame {
  std::string path;  // as written in the annotation file
  std::vector<face_annotation> faces;
  corpus source = corpus::fddb;
  std::optional<split> official_split;  // WIDER ships its own split
  friend bool operator==(const annotated_frame&, const annotated_frame&) = default;
};

/// Malformed annotation file. `line()` is 1-based; 0 when the problem is end of input.
class parse_error : public error {
 public:
  parse_error(std::string source, std::size_t line, const std::string& what)
      : error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

class line_reader {
 public:
  line_reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  /// Next line with the trailing CR stripped; nullopt at end of input.
  std::optional<std::string> next() {
    std::string s;
    if (!std::getline(in_, s)) return std::nullopt;
    ++line_;
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
  }

  std::optional<std::string> next_nonblank() {
    while (auto s = next()) {
      if (s->find_first_not_of(" \t") != std::string::npos) return s;
    }
    return std::nullopt;
  }

  std::string require(const char* what) {
    auto s = next();
    if (!s) throw parse_error(source_, line_ + 1, std::string("unexpected end of file, expected ") + what);
    return *s;
  }

  [[noreturn]] void fail(const std::string& what) const { throw parse_error(source_, line_, what); }
  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

inline std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> to_double(std::string_view f) {
  double v = 0;
  if (!f.empty() && f.front() == '+') f.remove_prefix(1);
  auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc{} || p != f.data() + f.size()) return std::nullopt;
  return v;
}

inline std::size_t read_count(line_reader& r) {
  const std::string line = r.require("face count");
  const auto t = trim(line);
  std::size_t n = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), n);
  if (t.empty() || ec != std::errc{} || p != t.data() + t.size())
    r.fail("expected a non-negative face count, got '" + line + "'");
  return n;
}

inline std::vector<double> read_numbers(line_reader& r, std::string_view line, std::size_t count) {
  const auto fields = split_fields(line);
  if (fields.size() < count)
    r.fail("expected at least " + std::to_string(count) + " fields, got " + std::to_string(fields.size()));
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto v = to_double(fields[i]);
    if (!v) r.fail("non-numeric field '" + std::string(fields[i]) + "'");
    out.push_back(*v);
  }
  return out;
}

inline void append_number(std::string& out, double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, p);
}

}  // namespace detail

/// FDDB ellipse list: image path line, face count line, then one
/// "ra rb theta cx cy 1" line per face.
inline std::vector<annotated_frame> parse_fddb(std::istream& in, const std::string& source = "<fddb>") {
  detail::line_reader r(in, source);
  std::vector<annotated_frame> frames;
  while (auto path = r.next_nonblank()) {
    annotated_frame frame;
    frame.path = std::string(detail::trim(*path));
    frame.source = corpus::fddb;
    const std::size_t n = detail::read_count(r);
    for (std::size_t k = 0; k < n; ++k) {
      const std::string line = r.require("ellipse line");
      const auto v = detail::read_numbers(r, line, 5);
      if (v[0] < 0 || v[1] < 0) r.fail("negative ellipse radius");
      frame.faces.emplace_back(face_ellipse{v[0], v[1], v[2], v[3], v[4]});
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

/// WIDER FACE bbx_gt list: image path line, face count line, then one line per
/// face starting with "x y w h"; the attribute flags after those are ignored.
/// A zero count is followed by a single all-zero placeholder row.
inline std::vector<annotated_frame> parse_wider(std::istream& in, const std::string& source = "<wider>",
                                                std::optional<split> official = std::nullopt) {
  detail::line_reader r(in, source);
  std::vector<annotated_frame> frames;
  while (auto path = r.next_nonblank()) {
    annotated_frame frame;
    frame.path = std::string(detail::trim(*path));
    frame.source = corpus::wider;
    frame.official_split = official;
    const std::size_t n = detail::read_count(r);
    if (n == 0) {
      const std::string line = r.require("placeholder row");
      const auto fields = detail::split_fields(line);
      if (fields.empty()) r.fail("empty placeholder row");
      for (const auto f : fields) {
        const auto v = detail::to_double(f);
        if (!v) r.fail("non-numeric field '" + std::string(f) + "'");
        if (*v != 0) r.fail("placeholder row after a zero count must be all zeros");
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      const std::string line = r.require("box line");
      const auto v = detail::read_numbers(r, line, 4);
      if (v[2] < 0 || v[3] < 0) r.fail("negative box size");
      frame.faces.emplace_back(face_box{v[0], v[1], v[2], v[3], {}, {}});
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

inline std::vector<annotated_frame> parse_fddb(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_fddb(in);
}

inline std::vector<annotated_frame> parse_wider(std::string_view text, std::optional<split> official = std::nullopt) {
  std::istringstream in{std::string(text)};
  return parse_wider(in, "<wider>", official);
}

/// Serializes ellipse frames in the FDDB list format, shortest round-trip decimals.
inline std::string write_fddb(const std::vector<annotated_frame>& frames) {
  std::string out;
  for (const auto& f : frames) {
    out += f.path;
    out += '\n';
    out += std::to_string(f.faces.size());
    out += '\n';
    for (const auto& face : f.faces) {
      const auto* e = std::get_if<face_ellipse>(&face);
      if (!e) throw error("write_fddb: frame '" + f.path + "' holds a box annotation");
      for (double v : {e->ra, e->rb, e->theta, e->cx, e->cy}) {
        detail::append_number(out, v);
        out += ' ';
      }
      out += "1\n";
    }
  }
  return out;
}

/// Serializes box frames in the WIDER list format with zeroed attribute flags.
inline std::string write_wider(const std::vector<annotated_frame>& frames) {
  std::string out;
  for (const auto& f : frames) {
    out += f.path;
    out += '\n';
    out += std::to_string(f.faces.size());
    out += '\n';
    if (f.faces.empty()) out += "0 0 0 0 0 0 0 0 0 0 \n";
    for (const auto& face : f.faces) {
      const auto* b = std::get_if<face_box>(&face);
      if (!b) throw error("write_wider: frame '" + f.path + "' holds an ellipse annotation");
      for (double v : {b->x, b->y, b->w, b->h}) {
        detail::append_number(out, v);
        out += ' ';
      }
      out += "0 0 0 0 0 0 \n";
    }
  }
  return out;
}

/// Blurs every face of the frame with one frame-wide sigma and pastes the
/// blurred pixels back under the union of the face ellipses. Faces without
/// positive area do not take part in sigma selection.
template <class T>
basic_image<T> blur_faces(const basic_image<T>& img, std::span<const face_annotation> faces,
                          const sigma_rule& rule, double* sigma_used = nullptr) {
  std::vector<double> dims;
  for (const auto& f : faces)
    if (has_positive_area(f)) dims.push_back(face_min_dimension(f));
  if (dims.empty()) return img;
  const binary_mask mask = face_mask(faces, img.width(), img.height());
  if (mask.none()) return img;
  const double sigma = select_sigma_from_dimensions(dims, rule);
  if (sigma_used) *sigma_used = sigma;
  return composite(img, gaussian_blur(img, sigma), mask);
}

template <class T>
struct training_pair {
  basic_image<T> input;
  basic_image<T> target;
};

/// Training pair for one annotated frame: the untouched image and the same
/// image with its faces blurred. Boxes go through box_to_ellipse first.
template <class T>
training_pair<T> build_pair(const basic_image<T>& img, const annotated_frame& frame, const sigma_rule& rule) {
  if (img.empty()) throw error("build_pair: empty image for '" + frame.path + "'");
  return {img, blur_faces(img, std::span<const face_annotation>(frame.faces), rule)};
}

struct manifest_entry {
  std::string input;
  std::string target;
  split assigned = split::train;
  corpus source = corpus::fddb;
  std::size_t frame_index = 0;  // position in the source corpus list
  friend bool operator==(const manifest_entry&, const manifest_entry&) = default;
};

struct pair_manifest {
  std::vector<manifest_entry> entries;
  std::size_t train_count = 0;
  std::size_t val_count = 0;
  friend bool operator==(const pair_manifest&, const pair_manifest&) = default;
};

inline constexpr double fddb_train_fraction = 0.8;
inline constexpr std::uint64_t default_split_seed = 20230601;

namespace detail {

/// Fisher-Yates with rejection sampling on mt19937_64, so the permutation is
/// identical across standard library implementations.
inline void portable_shuffle(std::vector<std::size_t>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do r = rng(); while (r >= limit);
    std::swap(v[i - 1], v[static_cast<std::size_t>(r % bound)]);
  }
}

inline std::string pair_path(split s, std::string_view kind, corpus c, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return std::string(to_string(s)) + "/" + std::string(kind) + "/" + std::string(to_string(c)) + "_" + buf + ".png";
}

}  // namespace detail

/// Train/val assignment. WIDER frames keep their official split (frames
/// without one go to train); FDDB frames are shuffled with `seed` and split
/// 80/20.
inline pair_manifest build_split(const std::vector<annotated_frame>& fddb,
                                 const std::vector<annotated_frame>& wider, std::uint64_t seed) {
  pair_manifest m;
  auto add = [&](corpus c, std::size_t idx, split s) {
    m.entries.push_back({detail::pair_path(s, "input", c, idx), detail::pair_path(s, "target", c, idx), s, c, idx});
    (s == split::train ? m.train_count : m.val_count)++;
  };

  std::vector<std::size_t> order(fddb.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  detail::portable_shuffle(order, seed);
  const auto n_train = static_cast<std::size_t>(std::floor(fddb_train_fraction * static_cast<double>(fddb.size()) + 0.5));
  for (std::size_t k = 0; k < order.size(); ++k) add(corpus::fddb, order[k], k < n_train ? split::train : split::val);

  for (std::size_t i = 0; i < wider.size(); ++i) add(corpus::wider, i, wider[i].official_split.value_or(split::train));
  return m;
}

/// Tab-separated manifest: a header comment, then "input<TAB>target<TAB>split" per pair.
inline std::string write_manifest(const pair_manifest& m) {
  std::string out = "# input\ttarget\tsplit\n";
  for (const auto& e : m.entries) {
    out += e.input;
    out += '\t';
    out += e.target;
    out += '\t';
    out += to_string(e.assigned);
    out += '\n';
  }
  return out;
}

}  // namespace faceblur
