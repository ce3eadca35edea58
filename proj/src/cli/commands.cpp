// Copyright 2026 The deid Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "deid/annot_io/conll.hpp"
#include "deid/annot_io/inline_xml.hpp"
#include "deid/annot_io/jsonl.hpp"
#include "deid/cli/cli.hpp"
#include "deid/core/bio.hpp"
#include "deid/core/error.hpp"
#include "deid/core/fileio.hpp"
#include "deid/core/tokenize.hpp"
#include "deid/corpusstats/corpusstats.hpp"
#include "deid/recognize/external.hpp"
#include "deid/recognize/rules.hpp"
#include "deid/recognize/transport.hpp"
#include "deid/tagmap/tagmap.hpp"

namespace deid::cli {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Context {
  std::ostream& out;
  std::ostream& err;
  PipelineConfig config;
  std::string out_dir;  // --out-dir, overrides config.output_dir
};

// Relative output paths land under the output directory when one is set.
fs::path output_path(const Context& ctx, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute()) return path;
  if (!ctx.out_dir.empty()) return fs::path(ctx.out_dir) / path;
  if (!ctx.config.output_dir.empty()) return ctx.config.output_dir / path;
  return path;
}

// Writes to the file when a path is given, otherwise to stdout.
void emit(Context& ctx, const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    ctx.out << content;
  } else {
    write_file(output_path(ctx, path), content);
  }
}

std::string format_of(const std::string& path, const std::string& given) {
  if (!given.empty()) return given;
  const auto ext = fs::path(path).extension().string();
  if (ext == ".conll") return "conll";
  if (ext == ".xml" || ext == ".txt") return "xml";
  return "jsonl";
}

std::string serialize(const Corpus& corpus, const std::string& format) {
  if (format == "conll") return annot_io::write_conll(corpus);
  if (format == "xml") {
    std::string out;
    for (const auto& d : corpus.documents) {
      out += annot_io::write_inline_xml(d, annot_io::InlineXmlPolicy::strict()) + "\n";
    }
    return out;
  }
  if (format == "jsonl") return annot_io::write_jsonl(corpus);
  throw Error(ErrorCode::kInvalidConfig, "unknown format '" + format + "'");
}

Corpus read_input(const Context& ctx, const std::string& path, const std::string& schema_flag) {
  return load_corpus(path, schema_flag.empty() ? ctx.config.schema : schema_flag);
}

std::string endpoint_for(const Context& ctx, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kEndpointEnv); env && *env) return env;
  return ctx.config.endpoint;
}

std::vector<std::string> read_labels(const std::string& path) {
  std::vector<std::string> labels;
  std::istringstream in(read_file(path));
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) labels.push_back(line);
  }
  return labels;
}

// Token-level tags of every document, aligned by document id.
std::pair<std::vector<std::string>, std::vector<std::string>> corpus_labels(const Corpus& a, const Corpus& b) {
  std::map<std::string, const Document*> by_id;
  for (const auto& d : b.documents) by_id[d.id] = &d;
  std::pair<std::vector<std::string>, std::vector<std::string>> out;
  for (const auto& d : a.documents) {
    const auto it = by_id.find(d.id);
    if (it == by_id.end()) throw Error(ErrorCode::kMissingDocument, "document '" + d.id + "' missing from second rater");
    if (it->second->text != d.text) throw Error(ErrorCode::kSchemaMismatch, "text differs for document '" + d.id + "'");
    const auto toks = tokenize(d.text).tokens;
    auto ta = token_tags(toks, d.entities, a.schema.other);
    auto tb = token_tags(toks, it->second->entities, b.schema.other);
    out.first.insert(out.first.end(), ta.begin(), ta.end());
    out.second.insert(out.second.end(), tb.begin(), tb.end());
  }
  return out;
}

std::vector<double> parse_ratios(const std::string& s) {
  std::vector<double> r;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, ',');) {
    try {
      std::size_t used = 0;
      r.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kRatioMismatch, "bad ratio '" + part + "'");
    }
  }
  return r;
}

std::set<std::string> read_stoplist(const fs::path& path) {
  std::set<std::string> s;
  if (path.empty()) return s;
  for (auto& w : read_labels(path.string())) s.insert(w);
  return s;
}

syngen::PromptTemplate template_for(const std::string& id) {
  if (id == "A" || id == "B" || id == "C") return syngen::builtin_template(id);
  return syngen::load_template(id);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"deid: clinical text de-identification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Expand help for all subcommands");
  std::string config_path, out_dir;
  app.add_option("--config", config_path, "Pipeline config JSON; flags override it")->check(CLI::ExistingFile);
  app.add_option("--out-dir", out_dir, "Directory for relative output paths");
  std::string schema_flag;
  app.add_option("--schema", schema_flag, "Input schema: canonical, infer or a schema JSON file");

  std::map<std::string, std::string> s;  // string flags, keyed "<cmd>.<flag>"
  std::map<std::string, std::vector<std::string>> v;
  std::map<std::string, long long> n;
  std::map<std::string, double> d;
  auto opt = [&](CLI::App* c, const std::string& flag, const std::string& help, bool required = false) {
    auto* o = c->add_option("--" + flag, s[c->get_name() + "." + flag], help);
    if (required) o->required();
    return o;
  };

  auto* convert = app.add_subcommand("convert", "Convert between JSONL, CoNLL and inline-XML");
  opt(convert, "in", "Input file", true);
  opt(convert, "out", "Output file (stdout when absent)");
  opt(convert, "from", "Input format: jsonl, conll, xml (default: by extension)");
  opt(convert, "to", "Output format: jsonl, conll, xml (default: by extension of --out, else jsonl)");
  opt(convert, "schema", "canonical, infer or a schema JSON file");

  auto* map_tags = app.add_subcommand("map-tags", "Map source tags into the canonical schema");
  opt(map_tags, "in", "Input corpus", true);
  opt(map_tags, "out", "Output JSONL");
  opt(map_tags, "map", "Tag map JSON (default: built-in canonical map)");
  opt(map_tags, "audit", "Write the mapping audit JSON here");

  auto* deidentify = app.add_subcommand("deidentify", "Redact or replace PHI with surrogates");
  opt(deidentify, "in", "Input corpus", true);
  opt(deidentify, "out", "Output JSONL");
  opt(deidentify, "mode", "redact or surrogate")->check(CLI::IsMember({"redact", "surrogate"}));
  opt(deidentify, "surrogate-config", "Surrogate config JSON");
  opt(deidentify, "audit", "Write the replacement audit JSONL here");
  deidentify->add_option("--seed", n["deidentify.seed"], "Surrogate seed");
  deidentify->add_option("--threads", n["deidentify.threads"], "Worker threads");

  auto* recognize_cmd = app.add_subcommand("recognize", "Run a recognizer over a corpus");
  opt(recognize_cmd, "in", "Input corpus", true);
  opt(recognize_cmd, "out", "Predicted corpus JSONL");
  opt(recognize_cmd, "backend", "rules or external")->check(CLI::IsMember({"rules", "external"}));
  opt(recognize_cmd, "endpoint", "http://host:port/path or a command (overrides $" + std::string(kEndpointEnv) + ")");
  opt(recognize_cmd, "rulebook", "Rulebook JSON for the rules backend");
  opt(recognize_cmd, "report", "Write the run report JSON here");
  recognize_cmd->add_option("--timeout-ms", n["recognize.timeout-ms"], "Per-request timeout");
  recognize_cmd->add_option("--retry", n["recognize.retry"], "Retries after a timeout or transport failure");
  recognize_cmd->add_option("--repeats", n["recognize.repeats"], "Predictions per document");

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold annotations");
  opt(evaluate, "gold", "Gold corpus", true);
  opt(evaluate, "pred", "Predicted corpus", true);
  opt(evaluate, "mode", "token or entity_strict")->check(CLI::IsMember({"token", "entity_strict"}));
  opt(evaluate, "out", "Write the report JSON here");
  opt(evaluate, "schema", "canonical, infer or a schema JSON file");

  auto* kappa = app.add_subcommand("kappa", "Cohen's kappa between two raters");
  opt(kappa, "a", "First rater: labels (one per line) or an annotated corpus", true);
  opt(kappa, "b", "Second rater, same form", true);
  opt(kappa, "out", "Write the agreement JSON here");

  auto* stats = app.add_subcommand("stats", "Corpus summary statistics");
  opt(stats, "in", "Input corpus", true);
  opt(stats, "out", "Write the summary JSON here");
  opt(stats, "tags", "Write the tag distribution JSON here");

  auto* ngrams = app.add_subcommand("ngrams", "Top-k n-gram profile as CSV");
  opt(ngrams, "in", "Input corpus", true);
  opt(ngrams, "out", "Output CSV");
  opt(ngrams, "scope", "whole_text or phi_adjacent")->check(CLI::IsMember({"whole_text", "phi_adjacent"}));
  opt(ngrams, "stoplist", "One stopword per line");
  ngrams->add_option("-n,--n", n["ngrams.n"], "n-gram order")->check(CLI::Range(1, 10));
  ngrams->add_option("-k,--k", n["ngrams.k"], "Entries to keep");
  ngrams->add_option("--window", n["ngrams.window"], "PHI adjacency window in tokens");

  auto* compare = app.add_subcommand("compare", "Jaccard distance and BERTScore between two corpora");
  opt(compare, "a", "Reference corpus", true);
  opt(compare, "b", "Candidate corpus", true);
  opt(compare, "endpoint", "Embedding backend (default: in-process hash embeddings)");
  opt(compare, "out", "Write the comparison JSON here");

  auto* weights = app.add_subcommand("weights", "Class weights ln(4n/n_t) for weighted cross entropy");
  opt(weights, "in", "Input corpus", true);
  opt(weights, "out", "Write the weights JSON here");
  weights->add_option("--zero-weight", d["weights.zero-weight"], "Weight for tags with no tokens");

  auto* split_cmd = app.add_subcommand("split", "Seeded train/val/test split");
  opt(split_cmd, "in", "Input corpus", true);
  opt(split_cmd, "ratios", "train,val,test as counts or fractions", true);
  split_cmd->add_option("--seed", n["split.seed"], "Shuffle seed");

  auto* generate = app.add_subcommand("generate", "Generate synthetic summaries from exemplars");
  opt(generate, "job", "Generation job JSON");
  opt(generate, "exemplars", "Exemplar corpus (when no job file)");
  opt(generate, "template", "A, B, C or a template file");
  opt(generate, "endpoint", "LLM backend (overrides $" + std::string(kEndpointEnv) + ")");
  generate->add_option("--fanout", n["generate.fanout"], "Attempts per exemplar");
  generate->add_option("--temperature", d["generate.temperature"], "Sampling temperature");
  generate->add_flag("--filter", n["generate.filter"], "Also filter the outputs");

  auto* filter = app.add_subcommand("filter", "Validate raw generations into an annotated corpus");
  opt(filter, "raw-dir", "Directory holding raw/attempts.jsonl (default: the output directory)");
  opt(filter, "policy", "Filter policy JSON");
  opt(filter, "template", "Template whose entity inventory is allowed (A, B, C or a file)");
  opt(filter, "exemplars", "Exemplar corpus; adds a quality report when given");

  auto* matrix = app.add_subcommand("run-matrix", "Evaluate every train-set x test-set cell");
  std::string matrix_path;
  matrix->add_option("matrix", matrix_path, "Matrix JSON")->required()->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  Context ctx{out, err, {}, out_dir};
  auto has = [&](CLI::App* c, const std::string& flag) { return c->count("--" + flag) > 0; };
  auto str = [&](CLI::App* c, const std::string& flag) { return s[c->get_name() + "." + flag]; };

  try {
    if (!config_path.empty()) ctx.config = PipelineConfig::load(config_path);
    if (!schema_flag.empty()) ctx.config.schema = schema_flag;
    auto& cfg = ctx.config;

    if (*convert) {
      const auto in = str(convert, "in");
      const auto from = format_of(in, str(convert, "from"));
      const auto to = format_of(str(convert, "out").empty() ? std::string("x.jsonl") : str(convert, "out"), str(convert, "to"));
      fs::path src(in);
      Corpus c;
      if (from == "xml") {
        c = load_corpus(src.extension() == ".xml" ? src : fs::path(in), str(convert, "schema").empty() ? cfg.schema : str(convert, "schema"));
      } else {
        c = read_input(ctx, in, str(convert, "schema"));
      }
      emit(ctx, str(convert, "out"), serialize(c, to));
      err << "converted " << c.documents.size() << " document(s) to " << to << "\n";
    } else if (*map_tags) {
      const auto c = read_input(ctx, str(map_tags, "in"), "infer");
      tagmap::TagMap map;
      const auto map_path = has(map_tags, "map") ? str(map_tags, "map") : cfg.tagmap.string();
      if (!map_path.empty()) {
        try {
          map = tagmap::TagMap::from_json(json::parse(read_file(map_path)));
        } catch (const json::exception& e) {
          throw Error(ErrorCode::kInvalidConfig, std::string("bad tag map: ") + e.what(), {map_path, 0, std::nullopt});
        }
      } else {
        map = tagmap::builtin_canonical_map(c.schema.tags);
      }
      const auto mapped = tagmap::apply_tagmap(c, map);
      emit(ctx, str(map_tags, "out"), annot_io::write_jsonl(mapped.corpus));
      if (has(map_tags, "audit")) emit(ctx, str(map_tags, "audit"), mapped.audit.to_json().dump(2) + "\n");
      for (const auto& [tag, count] : mapped.audit.default_hits) {
        err << "unmapped tag '" << tag << "' -> " << map.fallback() << " (" << count << ")\n";
      }
    } else if (*deidentify) {
      const auto c = read_input(ctx, str(deidentify, "in"), "");
      auto scfg = has(deidentify, "surrogate-config") ? surrogate::load_config(str(deidentify, "surrogate-config")) : cfg.surrogate;
      if (has(deidentify, "seed")) scfg.seed = static_cast<std::uint64_t>(n["deidentify.seed"]);
      const auto mode = str(deidentify, "mode") == "surrogate" ? surrogate::ScrubMode::kSurrogate : surrogate::ScrubMode::kRedact;
      const unsigned threads = has(deidentify, "threads") ? static_cast<unsigned>(n["deidentify.threads"]) : cfg.concurrency;
      const auto result = surrogate::scrub_corpus(c, mode, scfg, threads);
      emit(ctx, str(deidentify, "out"), annot_io::write_jsonl(result.corpus));
      if (has(deidentify, "audit")) emit(ctx, str(deidentify, "audit"), surrogate::audit_jsonl(result.plans));
      err << "de-identified " << result.corpus.documents.size() << " document(s)\n";
    } else if (*recognize_cmd) {
      const auto c = read_input(ctx, str(recognize_cmd, "in"), "");
      const auto backend_kind = has(recognize_cmd, "backend") ? str(recognize_cmd, "backend") : cfg.backend;
      recognize::RunReport report;
      if (backend_kind == "rules") {
        const auto rb_path = has(recognize_cmd, "rulebook") ? fs::path(str(recognize_cmd, "rulebook")) : cfg.rulebook;
        const recognize::RuleRecognizer rules(rb_path.empty() ? recognize::builtin_rulebook() : recognize::load_rulebook(rb_path));
        report = recognize::recognize_builtin(c.documents, rules);
      } else {
        const auto endpoint = endpoint_for(ctx, str(recognize_cmd, "endpoint"));
        if (endpoint.empty()) throw Error(ErrorCode::kInvalidConfig, "external backend needs --endpoint or $" + std::string(kEndpointEnv));
        recognize::RecognizerBackend backend;
        backend.kind = recognize::RecognizerBackend::Kind::kExternal;
        backend.name = endpoint;
        backend.endpoint = endpoint;
        backend.timeout = has(recognize_cmd, "timeout-ms") ? std::chrono::milliseconds(n["recognize.timeout-ms"]) : cfg.timeout;
        backend.retry = has(recognize_cmd, "retry") ? static_cast<unsigned>(n["recognize.retry"]) : cfg.retry;
        backend.repeats = has(recognize_cmd, "repeats") ? static_cast<unsigned>(n["recognize.repeats"]) : cfg.repeats;
        backend.concurrency = cfg.concurrency;
        backend.schema = c.schema.tags.size() > 1 ? c.schema : canonical_schema();
        const auto transport = recognize::make_transport(endpoint, cfg.concurrency);
        report = recognize::recognize_external(c.documents, backend, *transport);
      }
      const auto schema = c.schema.tags.size() > 1 ? c.schema : canonical_schema();
      emit(ctx, str(recognize_cmd, "out"), annot_io::write_jsonl(recognize::predictions_to_corpus(c.documents, report, schema)));
      if (has(recognize_cmd, "report")) emit(ctx, str(recognize_cmd, "report"), report.to_json().dump(2) + "\n");
      for (const auto& x : report.excluded) err << "excluded " << x.doc_id << ": " << to_string(x.code) << " " << x.reason << "\n";
    } else if (*evaluate) {
      const auto gold = read_input(ctx, str(evaluate, "gold"), str(evaluate, "schema"));
      const auto pred = load_corpus(str(evaluate, "pred"), "infer");
      Corpus pred_in_gold_schema{pred.documents, gold.schema};
      for (const auto& doc : pred.documents) validate_document(doc, &gold.schema);
      const auto mode = has(evaluate, "mode") ? evalmetrics::parse_mode(str(evaluate, "mode")) : cfg.eval_mode;
      const auto report = evalmetrics::evaluate(gold, pred_in_gold_schema, mode);
      out << report.to_table();
      if (has(evaluate, "out")) emit(ctx, str(evaluate, "out"), report.to_json().dump(2) + "\n");
    } else if (*kappa) {
      const auto a = str(kappa, "a"), b = str(kappa, "b");
      std::vector<std::string> la, lb;
      const auto ext = fs::path(a).extension();
      if (ext == ".jsonl" || ext == ".conll" || ext == ".xml") {
        std::tie(la, lb) = corpus_labels(load_corpus(a, "infer"), load_corpus(b, "infer"));
      } else {
        la = read_labels(a);
        lb = read_labels(b);
      }
      const auto r = evalmetrics::cohens_kappa(la, lb);
      char buf[160];
      std::snprintf(buf, sizeof buf, "kappa %.4f (p_o %.4f, p_e %.4f, n %zu)%s\n", r.kappa, r.observed, r.expected, r.n_items,
                    r.degenerate ? " degenerate" : "");
      out << buf;
      if (has(kappa, "out")) emit(ctx, str(kappa, "out"), r.to_json().dump(2) + "\n");
    } else if (*stats) {
      const auto c = read_input(ctx, str(stats, "in"), "");
      const auto summary = corpusstats::summarize(c);
      out << summary.to_table();
      if (has(stats, "out")) emit(ctx, str(stats, "out"), summary.to_json().dump(2) + "\n");
      if (has(stats, "tags")) emit(ctx, str(stats, "tags"), tagmap::tag_distribution(c).to_json().dump(2) + "\n");
    } else if (*ngrams) {
      const auto c = read_input(ctx, str(ngrams, "in"), "");
      corpusstats::NGramOptions o;
      o.n = has(ngrams, "n") ? static_cast<std::size_t>(n["ngrams.n"]) : 1;
      o.k = has(ngrams, "k") ? static_cast<std::size_t>(n["ngrams.k"]) : cfg.top_k;
      o.window = has(ngrams, "window") ? static_cast<std::size_t>(n["ngrams.window"]) : cfg.ngram_window;
      o.scope = has(ngrams, "scope") ? corpusstats::parse_scope(str(ngrams, "scope")) : corpusstats::NGramScope::kWholeText;
      o.stoplist = read_stoplist(has(ngrams, "stoplist") ? fs::path(str(ngrams, "stoplist")) : cfg.stoplist);
      emit(ctx, str(ngrams, "out"), corpusstats::ngram_profile(c, o).to_csv());
    } else if (*compare) {
      const auto a = read_input(ctx, str(compare, "a"), "infer");
      const auto b = read_input(ctx, str(compare, "b"), "infer");
      std::unique_ptr<corpusstats::Embedder> embedder;
      const auto endpoint = str(compare, "endpoint");
      if (endpoint.empty()) {
        embedder = std::make_unique<corpusstats::HashEmbedder>(cfg.embed_dim, cfg.seed);
      } else {
        embedder = std::make_unique<corpusstats::RemoteEmbedder>(
            std::shared_ptr<recognize::Transport>(recognize::make_transport(endpoint, 1)), cfg.timeout);
      }
      const double jd = corpusstats::jaccard_distance(a, b);
      const auto bs = corpusstats::bertscore_corpus(b, a, *embedder);
      ordered_json j{{"a", corpusstats::summarize(a).to_json()},
                     {"b", corpusstats::summarize(b).to_json()},
                     {"jaccard_distance", jd},
                     {"bertscore", bs.to_json()},
                     {"embeddings", endpoint.empty() ? "hash" : endpoint}};
      char buf[256];
      std::snprintf(buf, sizeof buf, "Jaccard Distance       %.4f\nBERTScore (F1)         %.4f\nBERTScore (Precision)  %.4f\nBERTScore (Recall)     %.4f\n",
                    jd, bs.f1, bs.precision, bs.recall);
      out << buf;
      if (has(compare, "out")) emit(ctx, str(compare, "out"), j.dump(2) + "\n");
    } else if (*weights) {
      const auto c = read_input(ctx, str(weights, "in"), "");
      const double zero = has(weights, "zero-weight") ? d["weights.zero-weight"] : cfg.zero_count_weight;
      const auto w = corpusstats::class_weights(c, zero);
      for (const auto& msg : w.warnings) err << "warning: " << msg << "\n";
      char buf[128];
      for (const auto& t : w.weights) {
        std::snprintf(buf, sizeof buf, "%-10s n_t=%-8zu w_t=%.6f%s\n", t.tag.c_str(), t.n_t, t.w_t, t.capped ? " (capped)" : "");
        out << buf;
      }
      if (has(weights, "out")) emit(ctx, str(weights, "out"), w.to_json().dump(2) + "\n");
    } else if (*split_cmd) {
      const auto c = read_input(ctx, str(split_cmd, "in"), "");
      const auto seed = has(split_cmd, "seed") ? static_cast<std::uint64_t>(n["split.seed"]) : cfg.seed;
      const auto parts = corpusstats::split(c, parse_ratios(str(split_cmd, "ratios")), seed);
      const fs::path dir = !ctx.out_dir.empty() ? fs::path(ctx.out_dir) : !cfg.output_dir.empty() ? cfg.output_dir : fs::path(".");
      write_file(dir / "train.jsonl", annot_io::write_jsonl(parts.train));
      write_file(dir / "val.jsonl", annot_io::write_jsonl(parts.val));
      write_file(dir / "test.jsonl", annot_io::write_jsonl(parts.test));
      out << "train " << parts.train.documents.size() << "\nval " << parts.val.documents.size() << "\ntest "
          << parts.test.documents.size() << "\n";
    } else if (*generate) {
      syngen::GenerationJob job;
      if (has(generate, "job")) {
        job = syngen::GenerationJob::from_json(json::parse(read_file(str(generate, "job"))), fs::path(str(generate, "job")).parent_path());
      } else {
        if (!has(generate, "exemplars")) throw Error(ErrorCode::kInvalidConfig, "generate needs --job or --exemplars");
        job.exemplars = load_corpus(str(generate, "exemplars"), "infer");
        job.tmpl = template_for(cfg.template_id);
        job.fanout = cfg.fanout;
        job.temperature = cfg.temperature;
        job.timeout = cfg.generation_timeout;
        job.validation = cfg.filter;
        job.concurrency = cfg.concurrency;
        job.endpoint = cfg.endpoint;
      }
      if (has(generate, "template")) job.tmpl = template_for(str(generate, "template"));
      if (has(generate, "fanout")) job.fanout = static_cast<unsigned>(n["generate.fanout"]);
      if (has(generate, "temperature")) job.temperature = d["generate.temperature"];
      job.endpoint = endpoint_for(ctx, has(generate, "endpoint") ? str(generate, "endpoint") : job.endpoint);
      if (job.endpoint.empty()) throw Error(ErrorCode::kInvalidConfig, "generate needs an endpoint");
      job.validate();
      const fs::path dir = !ctx.out_dir.empty() ? fs::path(ctx.out_dir) : !cfg.output_dir.empty() ? cfg.output_dir : fs::path(".");
      const auto transport = recognize::make_transport(job.endpoint, job.concurrency);
      const auto result = syngen::generate(job, *transport);
      syngen::write_raw(result, dir);
      write_file(dir / "generation.json", result.to_json().dump(2) + "\n");
      out << "scheduled " << result.scheduled() << "\nsucceeded " << result.succeeded() << "\nfailed " << result.failed() << "\n";
      if (n["generate.filter"]) {
        const auto f = syngen::filter_outputs(syngen::successful_outputs(result), job.validation,
                                              syngen::generation_schema(job.tmpl));
        write_file(dir / "accepted.jsonl", annot_io::write_jsonl(f.accepted));
        write_file(dir / "rejects.jsonl", f.rejects_jsonl());
        out << "accepted " << f.accepted.documents.size() << "\nrejected " << f.rejects.size() << "\n";
      }
    } else if (*filter) {
      const fs::path dir = !ctx.out_dir.empty() ? fs::path(ctx.out_dir) : !cfg.output_dir.empty() ? cfg.output_dir : fs::path(".");
      const fs::path raw_dir = has(filter, "raw-dir") ? fs::path(str(filter, "raw-dir")) : dir;
      const auto policy = has(filter, "policy") ? syngen::FilterPolicy::from_json(json::parse(read_file(str(filter, "policy"))))
                                                : cfg.filter;
      const auto tmpl = template_for(has(filter, "template") ? str(filter, "template") : cfg.template_id);
      const auto raw = syngen::read_raw(raw_dir);
      const auto f = syngen::filter_outputs(syngen::successful_outputs(raw), policy, syngen::generation_schema(tmpl));
      write_file(dir / "accepted.jsonl", annot_io::write_jsonl(f.accepted));
      write_file(dir / "rejects.jsonl", f.rejects_jsonl());
      auto summary = f.summary();
      summary["attempts"] = raw.scheduled();
      summary["backend_failures"] = raw.failed();
      if (has(filter, "exemplars") && !f.accepted.documents.empty()) {
        corpusstats::HashEmbedder emb(cfg.embed_dim, cfg.seed);
        const auto q = syngen::score_generation_quality(f.accepted, load_corpus(str(filter, "exemplars"), "infer"), emb);
        summary["quality"] = q.to_json();
        out << q.to_table();
      }
      write_file(dir / "filter.json", summary.dump(2) + "\n");
      out << "accepted " << f.accepted.documents.size() << "\nrejected " << f.rejects.size() << "\n";
      for (const auto& [reason, count] : f.summary()["reasons"].items()) out << "  " << reason << " " << count << "\n";
    } else if (*matrix) {
      const fs::path dir = !ctx.out_dir.empty() ? fs::path(ctx.out_dir) : !cfg.output_dir.empty() ? cfg.output_dir : fs::path(".");
      const auto reports = run_matrix(matrix_path, cfg, dir, err);
      for (const auto& r : reports) out << r.string() << "\n";
    }
    return 0;
  } catch (const Error& e) {
    err << "deid: " << to_string(e.code()) << ": " << e.what() << "\n";
    return is_io_error(e.code()) ? 2 : 1;
  } catch (const json::exception& e) {
    err << "deid: InvalidConfig: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "deid: IoError: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace deid::cli
