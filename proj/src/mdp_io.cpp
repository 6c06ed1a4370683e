#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "anderson_pi/errors.hpp"
#include "anderson_pi/mdp.hpp"
#include "anderson_pi/trace_io.hpp"

namespace anderson_pi {

using nlohmann::json;

namespace {

constexpr const char* kKeys[] = {"n_states", "n_actions", "gamma", "rewards", "transitions"};

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw FormatError("MDP file: " + where + ": " + what);
}

double read_number(const json& node, const std::string& where) {
  if (!node.is_number()) fail(where, "expected a number");
  const double v = node.get<double>();
  if (!std::isfinite(v)) fail(where, "non-finite value");
  return v;
}

std::size_t read_count(const json& doc, const char* key) {
  const auto& node = doc.at(key);
  if (!node.is_number_integer() || node.get<long long>() < 1) {
    fail(key, "expected a positive integer");
  }
  return static_cast<std::size_t>(node.get<long long>());
}

const json& expect_array(const json& node, std::size_t size, const std::string& where) {
  if (!node.is_array()) fail(where, "expected an array");
  if (node.size() != size) {
    fail(where, "expected " + std::to_string(size) + " entries, found " +
                    std::to_string(node.size()));
  }
  return node;
}

std::string at(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

}  // namespace

std::string to_json_text(const TabularMdp& mdp) {
  std::ostringstream out;
  const auto nS = mdp.n_states(), nA = mdp.n_actions();
  out << "{\n";
  out << "  \"n_states\": " << nS << ",\n";
  out << "  \"n_actions\": " << nA << ",\n";
  out << "  \"gamma\": " << format_real(mdp.gamma()) << ",\n";
  out << "  \"rewards\": [\n";
  for (std::size_t s = 0; s < nS; ++s) {
    out << "    [";
    for (std::size_t a = 0; a < nA; ++a) {
      out << (a ? ", " : "") << format_real(mdp.reward(s, a));
    }
    out << "]" << (s + 1 < nS ? "," : "") << "\n";
  }
  out << "  ],\n";
  out << "  \"transitions\": [\n";
  for (std::size_t s = 0; s < nS; ++s) {
    out << "    [\n";
    for (std::size_t a = 0; a < nA; ++a) {
      out << "      [";
      const auto row = mdp.row(s, a);
      for (std::size_t t = 0; t < nS; ++t) out << (t ? ", " : "") << format_real(row[t]);
      out << "]" << (a + 1 < nA ? "," : "") << "\n";
    }
    out << "    ]" << (s + 1 < nS ? "," : "") << "\n";
  }
  out << "  ]\n}\n";
  return out.str();
}

TabularMdp mdp_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports "line L, column C" in the message
    throw FormatError(std::string("MDP file: ") + e.what());
  }
  if (!doc.is_object()) fail("document", "top level must be an object");
  for (const auto& key : kKeys) {
    if (!doc.contains(key)) fail(key, std::string("missing field `") + key + "`");
  }
  for (const auto& item : doc.items()) {
    bool known = false;
    for (const auto& key : kKeys) known = known || item.key() == key;
    if (!known) fail(item.key(), "unexpected field `" + item.key() + "`");
  }

  const std::size_t nS = read_count(doc, "n_states");
  const std::size_t nA = read_count(doc, "n_actions");
  const double gamma = read_number(doc.at("gamma"), "gamma");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma", "discount not in [0,1)");

  std::vector<double> rewards(nS * nA);
  const auto& r = expect_array(doc.at("rewards"), nS, "rewards");
  for (std::size_t s = 0; s < nS; ++s) {
    const auto& row = expect_array(r[s], nA, at("rewards", s));
    for (std::size_t a = 0; a < nA; ++a) {
      rewards[s * nA + a] = read_number(row[a], at(at("rewards", s), a));
    }
  }

  std::vector<double> transitions(nS * nA * nS);
  const auto& p = expect_array(doc.at("transitions"), nS, "transitions");
  for (std::size_t s = 0; s < nS; ++s) {
    const auto& ps = expect_array(p[s], nA, at("transitions", s));
    for (std::size_t a = 0; a < nA; ++a) {
      const std::string where = at(at("transitions", s), a);
      const auto& row = expect_array(ps[a], nS, where);
      double total = 0.0;
      for (std::size_t t = 0; t < nS; ++t) {
        const double v = read_number(row[t], at(where, t));
        if (v < 0.0 || v > 1.0) fail(at(where, t), "probability outside [0,1]");
        transitions[(s * nA + a) * nS + t] = v;
        total += v;
      }
      if (!(std::abs(total - 1.0) <= kProbabilitySumTolerance)) {
        fail(where, "probabilities sum to " + format_real(total) + ", expected 1");
      }
    }
  }
  return {nS, nA, std::move(transitions), std::move(rewards), gamma};
}

void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << to_json_text(mdp);
  if (!out) throw FormatError("write failed: " + path.string());
}

TabularMdp load_mdp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return mdp_from_json_text(buffer.str());
}

}  // namespace anderson_pi
