#include "taxoeval/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "taxoeval/backend.hpp"
#include "taxoeval/error.hpp"
#include "taxoeval/masking.hpp"
#include "taxoeval/matcher.hpp"
#include "taxoeval/noise.hpp"
#include "taxoeval/prompt.hpp"
#include "taxoeval/report.hpp"
#include "taxoeval/scorer.hpp"
#include "taxoeval/taxonomy.hpp"
#include "util/text.hpp"

namespace taxoeval::cli {

namespace {

struct BackendArgs {
    std::string kind;
    std::string fixture;
    std::string url;
    std::string command;
    std::string model;
    std::string mask_token;
    std::string cache;
};

struct RunConfig {
    BackendArgs backend;
    std::size_t k = kDefaultTopK;
    std::string templates;
    std::string match_policy;
    bool period = false;
    std::size_t jobs = 1;
    bool keep_going = false;
    std::uint64_t seed = 0;
};

void add_backend_options(CLI::App* cmd, RunConfig& c) {
    cmd->add_option("--backend", c.backend.kind, "fixture, http or local (inferred when omitted)")
        ->check(CLI::IsMember({"fixture", "http", "local"}));
    cmd->add_option("--fixture", c.backend.fixture, "fixture JSON mapping prompts to ranked predictions");
    cmd->add_option("--url", c.backend.url, std::string("HTTP backend base URL (env ") + kBackendUrlEnv + ")");
    cmd->add_option("--command", c.backend.command, "local backend command speaking JSON lines on stdio");
    cmd->add_option("--model", c.backend.model, "model id");
    cmd->add_option("--mask-token", c.backend.mask_token, "mask token (default [MASK])");
    cmd->add_option("--cache", c.backend.cache, "JSON-lines prediction cache file");
    cmd->add_option("--templates", c.templates, "template file, one id<TAB>pattern per line");
    cmd->add_option("--match-policy", c.match_policy, "matching policy JSON");
    cmd->add_flag("--period", c.period, "append \" .\" to every prompt");
}

void add_scoring_options(CLI::App* cmd, RunConfig& c) {
    add_backend_options(cmd, c);
    cmd->add_option("-k,--top-k", c.k, "recall threshold")->check(CLI::PositiveNumber);
    cmd->add_option("-j,--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--keep-going", c.keep_going, "count failing edges as negative instead of aborting");
}

std::shared_ptr<Backend> make_backend(const BackendArgs& a, std::ostream& err) {
    std::string kind = a.kind;
    std::string url = a.url;
    if (url.empty()) {
        if (const char* env = std::getenv(kBackendUrlEnv)) url = env;
    }
    if (kind.empty()) {
        if (!a.fixture.empty()) kind = "fixture";
        else if (!a.command.empty()) kind = "local";
        else if (!url.empty()) kind = "http";
        else throw ConfigError("no backend configured: pass --fixture, --url or --command");
    }
    const std::optional<std::string> mask =
        a.mask_token.empty() ? std::nullopt : std::optional<std::string>(a.mask_token);
    std::shared_ptr<Backend> backend;
    if (kind == "fixture") {
        if (a.fixture.empty()) throw ConfigError("fixture backend needs --fixture");
        backend = FixtureBackend::load(a.fixture, a.model.empty() ? std::nullopt : std::optional(a.model), mask);
    } else if (kind == "http") {
        if (url.empty()) throw ConfigError(std::string("http backend needs --url or ") + kBackendUrlEnv);
        if (a.model.empty()) throw ConfigError("http backend needs --model");
        backend = std::make_shared<HttpBackend>(url, a.model, mask.value_or("[MASK]"));
    } else {
#ifdef TAXOEVAL_LOCAL_BACKEND
        if (a.command.empty()) throw ConfigError("local backend needs --command");
        if (a.model.empty()) throw ConfigError("local backend needs --model");
        backend = std::make_shared<LocalBackend>(a.command, a.model, mask.value_or("[MASK]"));
#else
        throw ConfigError("this build has no local backend");
#endif
    }
    if (!a.cache.empty()) {
        backend = std::make_shared<CachedBackend>(backend, a.cache, [&err](const std::string& w) {
            err << "warning: " << w << "\n";
        });
    }
    return backend;
}

struct Session {
    std::shared_ptr<Backend> backend;
    std::vector<PromptTemplate> templates;
    MatchPolicy policy;
    ScoreOptions options;
};

Session open_session(const RunConfig& c, std::ostream& err) {
    Session s;
    s.templates = c.templates.empty() ? default_templates() : load_templates(c.templates);
    if (!c.match_policy.empty()) s.policy = MatchPolicy::load(c.match_policy);
    s.options.k = c.k;
    s.options.jobs = c.jobs;
    s.options.keep_going = c.keep_going;
    s.options.render.terminal_period = c.period;
    s.backend = make_backend(c.backend, err);
    return s;
}

ReportConfig report_config(const Session& s) {
    const auto& d = s.backend->descriptor();
    return ReportConfig{d.model_id,
                        std::string(to_string(d.kind)),
                        d.mask_token,
                        s.options.k,
                        s.options.render.terminal_period,
                        template_set_hash(s.templates),
                        s.policy.hash()};
}

std::vector<double> parse_levels(const std::string& text) {
    std::vector<double> levels;
    for (const auto& part : util::split(text, ',')) {
        auto p = util::trim(part);
        if (p.empty()) continue;
        try {
            std::size_t used = 0;
            levels.push_back(std::stod(std::string(p), &used));
            if (used != p.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw InputError("invalid noise level \"" + std::string(p) + "\"");
        }
    }
    if (levels.empty()) throw InputError("no noise levels given");
    return levels;
}

std::set<std::string> read_term_file(const std::string& path) {
    std::set<std::string> out;
    const auto text = util::read_file(path);
    for (auto line : util::split_lines(text)) {
        auto t = util::trim(line);
        if (!t.empty() && t.front() != '#') out.insert(canonical_surface(t));
    }
    return out;
}

// --- subcommands ---------------------------------------------------------

int cmd_score(const RunConfig& c, const std::string& taxonomy_path, const std::string& out_path, std::ostream& out,
              std::ostream& err) {
    auto t = load_taxonomy(taxonomy_path);
    auto s = open_session(c, err);
    auto result = score_taxonomy(t, *s.backend, s.templates, s.options, s.policy);
    for (const auto& v : result.verdicts) {
        if (v.error) err << "warning: " << *v.error << "\n";
    }
    EvaluationReport report{report_config(s), result.score, std::move(result.verdicts)};
    if (!out_path.empty()) util::write_file(out_path, to_json(report));
    out << format_score(report.score.score()) << " " << report.score.n_positive << "/" << report.score.n_edges
        << "\n";
    return kExitOk;
}

int cmd_vote(const std::vector<std::string>& paths, std::optional<std::size_t> threshold, const std::string& out_path,
             const std::string& out_dir, std::ostream& out) {
    std::map<std::string, std::map<std::string, std::vector<EdgeVerdict>>> by_taxonomy;
    for (const auto& p : paths) {
        auto r = load_report(p);
        auto& models = by_taxonomy[r.score.taxonomy_name];
        if (!models.emplace(r.score.model_id, std::move(r.verdicts)).second) {
            throw InputError("two reports for taxonomy " + r.score.taxonomy_name + " and model " + r.score.model_id);
        }
    }
    if (!out_path.empty() && by_taxonomy.size() > 1) {
        throw InputError("--out takes a single taxonomy; use --out-dir for several");
    }
    std::vector<RateScore> scores;
    for (const auto& [name, models] : by_taxonomy) {
        const auto th = threshold.value_or(default_vote_threshold(models.size()));
        auto outcome = majority_vote(models, th, name);
        VoteReport report{outcome.score, th, {}, std::move(outcome.votes)};
        for (const auto& [model, _] : models) report.models.push_back(model);
        if (!out_path.empty()) util::write_file(out_path, to_json(report));
        if (!out_dir.empty()) {
            std::filesystem::create_directories(out_dir);
            util::write_file((std::filesystem::path(out_dir) / (name + ".vote.json")).string(), to_json(report));
        }
        scores.push_back(outcome.score);
    }
    for (const auto& s : rank_taxonomies(scores)) {
        out << s.taxonomy_name << " " << format_score(s.score()) << " " << s.n_positive << "/" << s.n_edges << "\n";
    }
    return kExitOk;
}

int cmd_rank(const std::vector<std::string>& paths, std::ostream& out) {
    std::vector<RateScore> scores;
    std::set<std::string> models;
    for (const auto& p : paths) {
        auto r = load_report(p);
        models.insert(r.score.model_id);
        scores.push_back(r.score);
    }
    if (models.size() > 1) throw InputError("rank needs reports scored under one model configuration");
    std::size_t position = 0;
    for (const auto& s : rank_taxonomies(scores)) {
        out << ++position << " " << s.taxonomy_name << " " << format_score(s.score()) << " " << s.n_positive << "/"
            << s.n_edges << "\n";
    }
    return kExitOk;
}

struct DegradeArgs {
    std::string taxonomy;
    std::string levels = "0,0.2,0.4,0.6,0.8,1.0";
    std::size_t repeats = 10;
    std::string csv;
    std::string plot;
    std::string vocab_pool;
    bool any_node = false;
};

int cmd_degrade(const RunConfig& c, const DegradeArgs& a, std::ostream& out, std::ostream& err) {
    auto t = load_taxonomy(a.taxonomy);
    NoiseSpec spec;
    spec.levels = parse_levels(a.levels);
    spec.seed = c.seed;
    spec.target = a.any_node ? ReplaceTarget::any_node : ReplaceTarget::child_only;
    if (!a.vocab_pool.empty()) {
        spec.pool = ReplacementPool::external_vocabulary;
        spec.vocabulary = load_vocabulary(a.vocab_pool);
    }
    validate(spec);
    auto s = open_session(c, err);
    auto result = sweep(t, spec, *s.backend, s.templates, s.options, s.policy, a.repeats);
    const auto csv = sweep_csv(result);
    if (!a.csv.empty()) util::write_file(a.csv, csv);
    if (!a.plot.empty()) util::write_file(a.plot, sweep_svg(result, t.name() + " relation accuracy vs noise"));
    out << csv.substr(csv.find("level,mean,std"));
    return kExitOk;
}

struct MaskArgs {
    std::string corpus;
    std::string out;
    std::vector<std::string> taxonomies;
    std::string main;
    std::string other;
    std::string autophrase;
    std::string policy = "entity15";
    double fraction = 1.0;
    bool single_occurrence = false;
    std::string base_vocab;
    std::string new_tokens;
};

int cmd_mask(const RunConfig& c, const MaskArgs& a, std::ostream& out, std::ostream& err) {
    EntityInventory inv;
    std::set<std::string> parents;
    for (const auto& path : a.taxonomies) {
        auto t = load_taxonomy(path);
        auto derived = EntityInventory::from_taxonomy(t);
        for (const auto& s : derived.main_topics()) inv.add(EntityClass::main, s);
        for (const auto& s : derived.other_terms()) inv.add(EntityClass::other, s);
        for (const auto& e : t.edges()) parents.insert(e.parent);
    }
    if (!a.main.empty()) {
        for (const auto& s : read_term_file(a.main)) {
            inv.add(EntityClass::main, s);
            parents.insert(s);
        }
    }
    if (!a.other.empty()) {
        for (const auto& s : read_term_file(a.other)) inv.add(EntityClass::other, s);
    }
    if (!a.autophrase.empty()) {
        for (const auto& s : read_term_file(a.autophrase)) inv.add(EntityClass::autophrase, s);
    }

    DatasetOptions o;
    o.policy = parse_masking_policy(a.policy);
    o.fraction = a.fraction;
    o.seed = c.seed;
    o.jobs = c.jobs;
    o.single_occurrence = a.single_occurrence;
    auto stats = build_dataset(a.corpus, a.out, inv, o);
    for (const auto& w : stats.warnings) err << "warning: " << w << "\n";

    out << "lines " << stats.lines_read << " usable " << stats.lines_usable << " selected " << stats.lines_selected
        << " examples " << stats.examples << "\n";
    for (auto cls : {EntityClass::main, EntityClass::other, EntityClass::autophrase, EntityClass::random}) {
        auto it = stats.masked_tokens.find(cls);
        out << "masked " << to_string(cls) << " " << (it == stats.masked_tokens.end() ? 0 : it->second) << "\n";
    }

    if (!a.new_tokens.empty()) {
        if (a.base_vocab.empty()) throw ConfigError("--new-tokens needs --base-vocab");
        auto tokens = missing_vocab(parents, load_vocab(a.base_vocab));
        std::string text;
        for (const auto& t : tokens) text += t + "\n";
        util::write_file(a.new_tokens, text);
        out << "new tokens " << tokens.size() << "\n";
    }
    return kExitOk;
}

int cmd_probe(const RunConfig& c, const std::string& child, const std::string& parent, std::size_t max_rank,
              std::ostream& out, std::ostream& err) {
    auto s = open_session(c, err);
    const auto& d = s.backend->descriptor();
    for (const auto& q : query_pool(canonical_surface(child), s.templates, d.mask_token, s.options.render)) {
        auto list = s.backend->fill_mask(q, max_rank);
        auto rank = rank_of(parent, list, s.policy);
        out << q.template_id << "\t" << q.rendered << "\t";
        for (std::size_t i = 0; i < std::min<std::size_t>(5, list.items.size()); ++i) {
            out << (i ? " " : "") << list.items[i].token;
        }
        out << "\t" << (rank ? std::to_string(*rank) : std::string("N/A")) << "\n";
    }
    return kExitOk;
}

int cmd_cache(const std::string& action, const std::string& path, std::ostream& out) {
    auto stats = action == "compact" ? compact_cache(path) : inspect_cache(path);
    out << "records " << stats.records << "\nkeys " << stats.keys << "\ncorrupt " << stats.corrupt << "\n";
    for (const auto& [model, n] : stats.keys_per_model) out << "model " << model << " " << n << "\n";
    if (action == "compact") out << "compacted to " << stats.keys << " records\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Label-free taxonomy evaluation with masked language models", "taxoeval"};
    app.require_subcommand(1);
    RunConfig config;

    auto* score = app.add_subcommand("score", "score a taxonomy's parent-child edges");
    std::string score_taxonomy_path;
    std::string score_out;
    score->add_option("taxonomy", score_taxonomy_path, "edge list or JSON tree")->required();
    score->add_option("-o,--out", score_out, "report JSON path");
    add_scoring_options(score, config);

    auto* vote = app.add_subcommand("vote", "majority vote over per-model reports");
    std::vector<std::string> vote_reports;
    std::optional<std::size_t> vote_threshold;
    std::string vote_out;
    std::string vote_out_dir;
    vote->add_option("reports", vote_reports, "report files")->required();
    vote->add_option("-t,--threshold", vote_threshold, "votes needed (default ceil(models/2))");
    vote->add_option("-o,--out", vote_out, "voted report path (single taxonomy)");
    vote->add_option("--out-dir", vote_out_dir, "directory for one voted report per taxonomy");

    auto* rank = app.add_subcommand("rank", "rank taxonomies by report score");
    std::vector<std::string> rank_reports;
    rank->add_option("reports", rank_reports, "report files")->required();

    auto* degrade_cmd = app.add_subcommand("degrade", "score-vs-noise sweep");
    DegradeArgs degrade_args;
    degrade_cmd->add_option("taxonomy", degrade_args.taxonomy)->required();
    degrade_cmd->add_option("--levels", degrade_args.levels, "comma-separated noise levels");
    degrade_cmd->add_option("--repeats", degrade_args.repeats)->check(CLI::PositiveNumber);
    degrade_cmd->add_option("--csv", degrade_args.csv, "CSV output path");
    degrade_cmd->add_option("--plot", degrade_args.plot, "SVG plot output path");
    degrade_cmd->add_option("--vocab-pool", degrade_args.vocab_pool, "external replacement vocabulary");
    degrade_cmd->add_flag("--any-node", degrade_args.any_node, "replace parents as well as children");
    degrade_cmd->add_option("--seed", config.seed);
    add_scoring_options(degrade_cmd, config);

    auto* mask = app.add_subcommand("mask", "build an entity-masked fine-tuning dataset");
    MaskArgs mask_args;
    mask->add_option("corpus", mask_args.corpus, "one review per line")->required();
    mask->add_option("-o,--out", mask_args.out, "dataset JSON-lines path")->required();
    mask->add_option("--taxonomy", mask_args.taxonomies, "taxonomy files seeding main/other entities");
    mask->add_option("--main", mask_args.main, "main topic list");
    mask->add_option("--other", mask_args.other, "other taxonomy term list");
    mask->add_option("--autophrase", mask_args.autophrase, "AutoPhrase term list");
    mask->add_option("--policy", mask_args.policy)->check(CLI::IsMember({"entity15", "entity_one", "token15"}));
    mask->add_option("--fraction", mask_args.fraction, "fraction of lines to sample")
        ->check(CLI::Range(0.0, 1.0));
    mask->add_flag("--single-occurrence", mask_args.single_occurrence, "entity_one masks one occurrence only");
    mask->add_option("--base-vocab", mask_args.base_vocab, "base tokenizer vocabulary, one token per line");
    mask->add_option("--new-tokens", mask_args.new_tokens, "output list of parent lemmas missing from the vocab");
    mask->add_option("--seed", config.seed);
    mask->add_option("-j,--jobs", config.jobs)->check(CLI::PositiveNumber);

    auto* probe = app.add_subcommand("probe", "per-prompt ranks of a parent for one child");
    std::string probe_child;
    std::string probe_parent;
    std::size_t probe_max_rank = 10000;
    probe->add_option("child", probe_child)->required();
    probe->add_option("parent", probe_parent)->required();
    probe->add_option("--max-rank", probe_max_rank, "predictions fetched per prompt")->check(CLI::PositiveNumber);
    add_backend_options(probe, config);

    auto* cache = app.add_subcommand("cache", "inspect or compact a prediction cache");
    std::string cache_action;
    std::string cache_path;
    cache->add_option("action", cache_action)->required()->check(CLI::IsMember({"inspect", "compact"}));
    cache->add_option("file", cache_path)->required();

    std::vector<std::string> rest(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rest);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }

    try {
        if (*score) return cmd_score(config, score_taxonomy_path, score_out, out, err);
        if (*vote) return cmd_vote(vote_reports, vote_threshold, vote_out, vote_out_dir, out);
        if (*rank) return cmd_rank(rank_reports, out);
        if (*degrade_cmd) return cmd_degrade(config, degrade_args, out, err);
        if (*mask) return cmd_mask(config, mask_args, out, err);
        if (*probe) return cmd_probe(config, probe_child, probe_parent, probe_max_rank, out, err);
        if (*cache) return cmd_cache(cache_action, cache_path, out);
    } catch (const BackendError& e) {
        err << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}

}  // namespace taxoeval::cli
