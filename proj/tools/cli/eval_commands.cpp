#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "vasr/metrics/wer.hpp"

namespace vasr::cli {
namespace {

struct Opts {
  std::string hyp, ref, results, manifest, out;
};

std::vector<metrics::EvalPair> pairs_from_text(const Opts& o) {
  const auto hyps = read_lines(o.hyp);
  const auto refs = read_lines(o.ref);
  if (hyps.size() != refs.size())
    throw std::runtime_error("evaluate: " + std::to_string(hyps.size()) + " hypotheses but " +
                             std::to_string(refs.size()) + " references");
  std::vector<metrics::EvalPair> pairs;
  for (std::size_t i = 0; i < hyps.size(); ++i)
    pairs.push_back({std::to_string(i + 1), hyps[i], refs[i]});
  return pairs;
}

// Results JSONL from `correct`, matched to manifest references by sample id.
std::vector<metrics::EvalPair> pairs_from_results(const Opts& o) {
  std::map<std::string, std::string> refs;
  for (const auto& r : dataset::read_manifest(o.manifest)) refs[r.id] = r.reference;
  std::vector<metrics::EvalPair> pairs;
  std::size_t n = 0;
  for (const auto& line : read_lines(o.results)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line);
    const auto id = j.at("sample_id").get<std::string>();
    const auto it = refs.find(id);
    if (it == refs.end())
      throw std::runtime_error(o.results + ":" + std::to_string(n) + ": sample '" + id +
                               "' is not in the manifest");
    pairs.push_back({id, j.at("final").get<std::string>(), it->second});
  }
  return pairs;
}

}  // namespace

void add_eval_commands(CLI::App& app) {
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("evaluate", "Word and sentence error rates");
  auto* hyp = sub->add_option("--hyp", o->hyp, "Hypotheses, one per line")->check(CLI::ExistingFile);
  auto* ref = sub->add_option("--ref", o->ref, "References, one per line")->check(CLI::ExistingFile);
  auto* res = sub->add_option("--results", o->results, "Results JSONL written by correct")
                  ->check(CLI::ExistingFile);
  auto* man = sub->add_option("--manifest", o->manifest, "Manifest holding the references")
                  ->check(CLI::ExistingFile);
  hyp->needs(ref);
  ref->needs(hyp);
  res->needs(man);
  hyp->excludes(res);
  sub->add_option("--out", o->out, "Write the full report (JSON)");
  add_config_option(*sub);
  sub->callback([o] {
    std::vector<metrics::EvalPair> pairs;
    if (!o->hyp.empty()) {
      pairs = pairs_from_text(*o);
    } else if (!o->results.empty()) {
      pairs = pairs_from_results(*o);
    } else {
      throw std::invalid_argument("evaluate needs --hyp/--ref or --results/--manifest");
    }
    const auto report = metrics::corpus_eval(pairs);
    if (!o->out.empty()) write_text(o->out, metrics::to_json(report).dump(2) + "\n");
    std::cout << metrics::format_summary(report) << '\n';
  });
}

}  // namespace vasr::cli
