#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qkt/metric_space.hpp"
#include "qkt/quasi.hpp"

namespace qkt {

using json = nlohmann::json;  // object keys are sorted, so dumps are canonical

inline std::string canonical(const json& j) { return j.dump(2) + "\n"; }

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("invalid JSON in " + what);
  return j;
}

// --- rationals -------------------------------------------------------------

inline json rat_json(const Rat& r) { return r.str(); }

inline Rat rat_of(const json& j) {
  if (j.is_number_integer()) return Rat(j.get<std::int64_t>());
  if (j.is_string()) return Rat::parse(j.get<std::string>());
  throw ConfigError("expected a rational as \"p/q\" or integer");
}

// --- spaces ------------------------------------------------------------------

struct SpaceSpec {
  std::string kind = "cycle";
  int size = 16;
  int cols = -1;

  SpacePtr build() const { return generate_space(kind, size, cols); }
};

inline json space_spec_json(const SpaceSpec& s) {
  json j;
  j["kind"] = s.kind;
  j["size"] = s.size;
  if (s.cols > 0) j["cols"] = s.cols;
  return j;
}

inline SpaceSpec space_spec_of(const json& j) {
  SpaceSpec s;
  if (!j.contains("kind") || !j.contains("size"))
    throw ConfigError("space spec needs \"kind\" and \"size\"");
  s.kind = j.at("kind").get<std::string>();
  s.size = j.at("size").get<int>();
  if (j.contains("cols")) s.cols = j.at("cols").get<int>();
  return s;
}

inline json space_json(const FiniteMetricSpace& sp) {
  json j;
  j["format"] = "qkt-space/1";
  j["name"] = sp.name;
  j["n"] = sp.n;
  json d = json::array();
  for (const Rat& x : sp.dist) d.push_back(x.str());
  j["dist"] = std::move(d);
  return j;
}

inline json family_json(const CoverFamily& f) {
  json j;
  j["pieces"] = f.pieces;
  j["r_disjoint"] = f.r_disjoint.str();
  j["max_diameter"] = f.max_diameter.str();
  return j;
}

// --- norm modes --------------------------------------------------------------

inline const char* mode_name(NormMode m) {
  switch (m) {
    case NormMode::Operator: return "operator";
    case NormMode::FrobeniusBound: return "frobenius";
    case NormMode::OneInfBound: return "oneinf";
  }
  return "operator";
}

inline NormMode mode_of(const std::string& s) {
  if (s == "operator") return NormMode::Operator;
  if (s == "frobenius") return NormMode::FrobeniusBound;
  if (s == "oneinf") return NormMode::OneInfBound;
  throw ConfigError("unknown norm mode: " + s + " (operator|frobenius|oneinf)");
}

// --- operators ---------------------------------------------------------------

inline json dense_json(const Dense& d) {
  json j;
  j["n"] = d.n;
  j["m"] = d.m;
  json re = json::array(), im = json::array();
  for (const cd& z : d.a) {
    re.push_back(z.real());
    im.push_back(z.imag());
  }
  j["re"] = std::move(re);
  j["im"] = std::move(im);
  return j;
}

inline Dense dense_of(const json& j) {
  Dense d(j.at("n").get<int>(), j.at("m").get<int>());
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (re.size() != d.a.size() || im.size() != d.a.size())
    throw ConfigError("dense: entry count mismatch");
  for (size_t k = 0; k < d.a.size(); ++k)
    d.a[k] = cd(re[k].get<double>(), im[k].get<double>());
  return d;
}

inline json banded_json(const BandedOperator& a) {
  json j;
  j["fiber"] = a.fiber;
  if (a.has_scalar()) j["scalar"] = dense_json(a.scalar);
  json blocks = json::array();
  for (const auto& [pq, blk] : a.blocks) {
    json b;
    b["p"] = pq.first;
    b["q"] = pq.second;
    b["block"] = dense_json(blk);
    blocks.push_back(std::move(b));
  }
  j["blocks"] = std::move(blocks);
  return j;
}

inline BandedOperator banded_of(const json& j, const SpacePtr& sp) {
  BandedOperator a = BandedOperator::zero(sp, j.at("fiber").get<int>());
  if (j.contains("scalar")) a.scalar = dense_of(j.at("scalar"));
  for (const auto& b : j.at("blocks"))
    a.blocks[{b.at("p").get<int>(), b.at("q").get<int>()}] = dense_of(b.at("block"));
  return a;
}

inline json quasi_json(const QuasiElement& e) {
  json j;
  j["kind"] = e.kind == QuasiElement::Kind::Projection ? "projection" : "unitary";
  j["eps"] = e.eps;
  j["r"] = e.r.str();
  j["residual"] = e.residual;
  j["residual_is_bound"] = e.residual_is_bound;
  j["op"] = banded_json(e.op);
  return j;
}

inline QuasiElement quasi_of(const json& j, const SpacePtr& sp, NormMode mode) {
  std::string k = j.at("kind").get<std::string>();
  QuasiElement::Kind kind;
  if (k == "projection")
    kind = QuasiElement::Kind::Projection;
  else if (k == "unitary")
    kind = QuasiElement::Kind::Unitary;
  else
    throw ConfigError("unknown quasi kind: " + k);
  BandedOperator op = banded_of(j.at("op"), sp);
  return certify(op, kind, j.at("eps").get<double>(), rat_of(j.at("r")), mode);
}

}  // namespace qkt
