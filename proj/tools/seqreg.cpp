// Command-line front end: buckets | reorder | prompt | train | gradcheck | eval.
// Machine-readable output (TSV/JSON) goes to stdout, diagnostics to stderr.
// Every run is fully determined by its inputs and --seed.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "seqreg/seqreg.hpp"
#include "seqreg/synthetic.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json tuple_to_json(const seqreg::SentimentTuple& t) {
    ordered_json j;
    j["category"] = t.category ? ordered_json(*t.category) : ordered_json(nullptr);
    j["aspect"] = t.aspect;
    j["opinion"] = t.opinion ? ordered_json(*t.opinion) : ordered_json(nullptr);
    j["polarity"] = seqreg::polarity_name(t.polarity);
    return j;
}

std::vector<seqreg::SentimentTuple> tuples_from_arg(const std::string& arg,
                                                    const seqreg::TaskSpec& spec) {
    // Inline JSON array, or a path to a file holding one.
    std::string payload = arg;
    if (!arg.empty() && arg[0] != '[') payload = seqreg::read_text_file(arg);
    json wrapper;
    wrapper["id"] = "cli";
    try {
        wrapper["tuples"] = json::parse(payload);
    } catch (const json::exception& e) {
        seqreg::raise(seqreg::ErrorCategory::Format, std::string("--tuples: ") + e.what());
    }
    seqreg::LoadOptions opts;
    opts.require_tuples = false;
    opts.require_text = false;
    auto examples = seqreg::load_examples_text(wrapper.dump() + "\n", spec, opts);
    return examples.empty() ? std::vector<seqreg::SentimentTuple>{} : examples[0].tuples;
}

// Deterministic fallback parse when no CoNLL-U is supplied: a left-to-right
// chain with the first token as root.
seqreg::DepSentence chain_parse(const std::vector<std::string>& tokens, const std::string& id) {
    seqreg::DepSentence s;
    s.id = id;
    s.tokens.resize(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        s.tokens[i].index = i;
        s.tokens[i].surface = tokens[i];
        s.tokens[i].head = i == 0 ? seqreg::Token::kRoot : static_cast<int>(i - 1);
        s.tokens[i].deprel = i == 0 ? "root" : "dep";
    }
    return s;
}

std::vector<std::size_t> parse_bucket_list(const std::string& arg) {
    std::vector<std::size_t> out;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(static_cast<std::size_t>(std::stoull(item)));
        } catch (const std::exception&) {
            seqreg::raise(seqreg::ErrorCategory::Input, "--buckets: bad boundary '" + item + "'");
        }
    }
    return out;
}

void print_permutation(const seqreg::Permutation& p) {
    for (std::size_t k = 0; k < p.size(); ++k)
        std::cout << (k ? " " : "") << p.order[k];
    std::cout << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contextual sequence optimization toolkit for generative ABSA"};
    app.require_subcommand(1);

    // buckets -------------------------------------------------------------
    auto* buckets_cmd = app.add_subcommand("buckets", "Relative-position bucket magnitudes as TSV");
    std::size_t max_offset = 0;
    seqreg::BucketConfig bucket_cfg;
    buckets_cmd->add_option("--max-offset", max_offset, "Largest offset to report")->required();
    buckets_cmd->add_option("--num-buckets", bucket_cfg.num_buckets, "Bucket count")->capture_default_str();
    buckets_cmd->add_option("--max-distance", bucket_cfg.max_distance, "Clipping distance")->capture_default_str();
    buckets_cmd->callback([&] {
        const auto rep = seqreg::compression_report(max_offset, bucket_cfg);
        for (std::size_t off = 0; off <= max_offset; ++off)
            std::cout << off << "\t" << rep.magnitude[off] << "\n";
    });

    // reorder --------------------------------------------------------------
    auto* reorder_cmd = app.add_subcommand("reorder", "Emit the optimized token order per sentence");
    std::string mode = "static", rule_name = "rule3", conllu_path, params_path, reprs_path;
    std::size_t dyn_dim = 16, dyn_heads = 8, dyn_layers = 2;
    std::int64_t seed = 5;
    seqreg::BiasConfig bias_cfg;
    reorder_cmd->add_option("--mode", mode, "static or dynamic")
        ->capture_default_str()
        ->check(CLI::IsMember({"static", "dynamic"}));
    reorder_cmd->add_option("--conllu", conllu_path, "CoNLL-U input file")->required();
    reorder_cmd->add_option("--rule", rule_name, "rule1|rule2|rule3 or a TSV path")->capture_default_str();
    reorder_cmd->add_option("--params", params_path, "Regulator params JSON (dynamic mode)");
    reorder_cmd->add_option("--reprs", reprs_path, "Representation matrix file (single sentence)");
    reorder_cmd->add_option("--dim", dyn_dim, "Hash-representation width")->capture_default_str();
    reorder_cmd->add_option("--heads", dyn_heads, "Attention heads")->capture_default_str();
    reorder_cmd->add_option("--layers", dyn_layers, "Graph attention layers")->capture_default_str();
    reorder_cmd->add_option("--seed", seed, "Seed for hashed reprs / param init")->capture_default_str();
    reorder_cmd->add_option("--l", bias_cfg.l, "Bias length constant")->capture_default_str();
    reorder_cmd->add_option("--d", bias_cfg.d, "Bias step constant")->capture_default_str();
    reorder_cmd->callback([&] {
        auto sentences = seqreg::parse_conllu_file(conllu_path);
        if (mode == "static") {
            const auto rules = seqreg::resolve_rule_table(rule_name);
            for (const auto& s : sentences) print_permutation(seqreg::static_order(s, rules));
            return;
        }
        std::optional<seqreg::RegulatorParams> params;
        if (!params_path.empty()) params = seqreg::load_params(params_path);
        if (!reprs_path.empty() && sentences.size() != 1)
            seqreg::raise(seqreg::ErrorCategory::Input,
                          "--reprs requires exactly one sentence in the input");
        for (auto& s : sentences) {
            std::size_t dim = params ? params->dim : dyn_dim;
            if (!reprs_path.empty()) {
                s.reprs = seqreg::read_matrix_file(reprs_path);
                dim = s.reprs->cols();
            } else {
                std::vector<std::string> surfaces;
                for (const auto& t : s.tokens) surfaces.push_back(t.surface);
                s.reprs = seqreg::hash_reprs(surfaces, dim, seed);
            }
            if (!params) {
                auto rng = seqreg::seeded_stream(static_cast<std::uint64_t>(seed), 0x9A7A);
                params = seqreg::init_params(dim, dyn_layers, dyn_heads, rng);
            }
            const auto res = seqreg::regulate(s, *params, bias_cfg);
            print_permutation(res.bundle.perm);
        }
    });

    // prompt ----------------------------------------------------------------
    auto* prompt_cmd = app.add_subcommand("prompt", "Prompt construction and the target codec");
    prompt_cmd->require_subcommand(1);
    std::string task_name_arg = "aste", tuples_arg, text_arg;
    auto* prompt_build = prompt_cmd->add_subcommand("build", "Emit semantic and few-shot prompts");
    prompt_build->add_option("--task", task_name_arg, "uabsa|aste|tasd|acos")->capture_default_str();
    prompt_build->callback([&] {
        const auto spec = seqreg::task_spec_from_name(task_name_arg);
        const auto bundle = seqreg::build_prompt(spec);
        ordered_json j;
        j["task"] = seqreg::task_name(spec.task);
        j["semantic"] = bundle.semantic;
        j["fewshot"] = bundle.fewshot;
        std::cout << j.dump() << "\n";
    });
    auto* prompt_encode = prompt_cmd->add_subcommand("encode", "Serialize tuples to a target string");
    prompt_encode->add_option("--task", task_name_arg, "uabsa|aste|tasd|acos")->capture_default_str();
    prompt_encode->add_option("--tuples", tuples_arg, "JSON array of tuples, inline or a file")
        ->required();
    prompt_encode->callback([&] {
        const auto spec = seqreg::task_spec_from_name(task_name_arg);
        const auto tuples = tuples_from_arg(tuples_arg, spec);
        std::cout << seqreg::serialize_target(tuples, spec) << "\n";
    });
    auto* prompt_decode = prompt_cmd->add_subcommand("decode", "Parse a generated target string");
    prompt_decode->add_option("--task", task_name_arg, "uabsa|aste|tasd|acos")->capture_default_str();
    prompt_decode->add_option("--text", text_arg, "Target string to parse")->required();
    prompt_decode->callback([&] {
        const auto spec = seqreg::task_spec_from_name(task_name_arg);
        const auto parsed = seqreg::parse_target(text_arg, spec);
        ordered_json j;
        j["tuples"] = json::array();
        for (const auto& t : parsed.tuples) j["tuples"].push_back(tuple_to_json(t));
        j["dropped"] = parsed.dropped;
        std::cout << j.dump() << "\n";
    });

    // train -------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "Fit the regulator with the pair-proximity loss");
    std::string data_path, train_conllu, out_path;
    seqreg::TrainConfig train_cfg;
    std::size_t train_dim = 16, train_heads = 8, train_layers = 2;
    bool train_dropout = false;
    train_cmd->add_option("--task", task_name_arg, "uabsa|aste|tasd|acos")->capture_default_str();
    train_cmd->add_option("--data", data_path, "Gold JSONL with aspect/opinion spans")->required();
    train_cmd->add_option("--conllu", train_conllu,
                          "Parses aligned with --data (chain trees when omitted)");
    train_cmd->add_option("--epochs", train_cfg.epochs, "Training epochs")->capture_default_str();
    train_cmd->add_option("--lr", train_cfg.lr, "Learning rate")->capture_default_str();
    train_cmd->add_option("--seed", train_cfg.seed, "Seed for init and dropout")->capture_default_str();
    train_cmd->add_option("--out", out_path, "Params JSON output path")->required();
    train_cmd->add_option("--dim", train_dim, "Representation width")->capture_default_str();
    train_cmd->add_option("--heads", train_heads, "Attention heads")->capture_default_str();
    train_cmd->add_option("--layers", train_layers, "Graph attention layers")->capture_default_str();
    train_cmd->add_option("--l", train_cfg.bias.l, "Bias length constant")->capture_default_str();
    train_cmd->add_option("--d", train_cfg.bias.d, "Bias step constant")->capture_default_str();
    train_cmd->add_flag("--dropout", train_dropout, "Enable attention dropout during training");
    train_cmd->callback([&] {
        const auto spec = seqreg::task_spec_from_name(task_name_arg);
        auto examples = seqreg::load_examples(data_path, spec);
        std::vector<seqreg::DepSentence> parses;
        if (!train_conllu.empty()) {
            parses = seqreg::parse_conllu_file(train_conllu);
            if (parses.size() != examples.size())
                seqreg::raise(seqreg::ErrorCategory::Input,
                              "--conllu sentence count does not match --data example count");
        }
        for (std::size_t i = 0; i < examples.size(); ++i) {
            seqreg::DepSentence parse =
                parses.empty() ? chain_parse(examples[i].tokens, examples[i].id) : parses[i];
            if (parse.size() != examples[i].tokens.size())
                seqreg::raise(seqreg::ErrorCategory::Input,
                              "example '" + examples[i].id + "': parse length != token count");
            std::vector<std::string> surfaces;
            for (const auto& t : parse.tokens) surfaces.push_back(t.surface);
            parse.reprs = seqreg::hash_reprs(surfaces, train_dim,
                                             static_cast<std::int64_t>(train_cfg.seed));
            examples[i].parse = std::move(parse);
        }
        train_cfg.dropout = train_dropout;
        auto rng = seqreg::seeded_stream(train_cfg.seed, 0x1A17);
        auto params = seqreg::init_params(train_dim, train_layers, train_heads, rng);
        const auto metrics = seqreg::train_surrogate(examples, params, train_cfg);
        seqreg::save_params(out_path, params);
        ordered_json j;
        j["epochs"] = train_cfg.epochs;
        j["pairs"] = metrics.pair_count;
        j["initial_loss"] = metrics.epoch_loss.empty() ? metrics.final_loss : metrics.epoch_loss[0];
        j["final_loss"] = metrics.final_loss;
        j["initial_rank_distance"] = metrics.initial_rank_distance;
        j["final_rank_distance"] = metrics.final_rank_distance;
        j["epoch_loss"] = metrics.epoch_loss;
        std::cout << j.dump() << "\n";
    });

    // gradcheck -----------------------------------------------------------
    auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
    double eps = 1e-5;
    std::size_t instances = 5;
    std::uint64_t grad_seed = 5;
    std::string loss_name = "pair";
    grad_cmd->add_option("--eps", eps, "Central-difference step")->capture_default_str();
    grad_cmd->add_option("--instances", instances, "Number of random instances")->capture_default_str();
    grad_cmd->add_option("--seed", grad_seed, "Instance generator seed")->capture_default_str();
    grad_cmd->add_option("--loss", loss_name, "pair|ps-target|ws-frozen|const")->capture_default_str();
    grad_cmd->callback([&] {
        ordered_json list = ordered_json::array();
        double worst = 0.0;
        for (std::size_t i = 0; i < instances; ++i) {
            auto rng = seqreg::seeded_stream(grad_seed, i);
            const std::size_t n = 3 + rng.next_below(4);          // 3..6
            const std::size_t heads = 1 + rng.next_below(2);      // 1..2
            const std::size_t dim = 4 + 2 * rng.next_below(3);    // 4, 6, 8
            const std::size_t layers = 1 + rng.next_below(2);     // 1..2
            auto sentence = seqreg::random_dep_sentence(n, rng);
            std::vector<std::string> surfaces;
            for (const auto& t : sentence.tokens) surfaces.push_back(t.surface);
            sentence.reprs = seqreg::hash_reprs(surfaces, dim,
                                                static_cast<std::int64_t>(grad_seed + i));
            auto params = seqreg::init_params(dim, layers, heads, rng);
            seqreg::GradCheckOptions opt;
            opt.loss = seqreg::loss_from_name(loss_name);
            opt.eps = eps;
            if (n >= 2) {
                const std::size_t a = rng.next_below(n);
                std::size_t o = rng.next_below(n);
                if (o == a) o = (a + 1) % n;
                opt.pairs = {{a, o}};
            }
            const double err = seqreg::grad_check(params, sentence, opt);
            worst = std::max(worst, err);
            list.push_back({{"n", n}, {"dim", dim}, {"heads", heads}, {"layers", layers},
                            {"max_rel_error", err}});
        }
        ordered_json j;
        j["loss"] = loss_name;
        j["eps"] = eps;
        j["instances"] = list;
        j["max_rel_error"] = worst;
        std::cout << j.dump() << "\n";
    });

    // eval ----------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "Tuple-level micro F1, optionally distance-bucketed");
    std::string gold_path, pred_path, buckets_arg;
    eval_cmd->add_option("--task", task_name_arg, "uabsa|aste|tasd|acos")->capture_default_str();
    eval_cmd->add_option("--gold", gold_path, "Gold JSONL")->required();
    eval_cmd->add_option("--pred", pred_path, "Prediction JSONL")->required();
    eval_cmd->add_option("--buckets", buckets_arg,
                         "Distance boundaries (e.g. 10,16) enabling the bucketed report");
    eval_cmd->callback([&] {
        const auto spec = seqreg::task_spec_from_name(task_name_arg);
        const auto gold = seqreg::load_examples(gold_path, spec);
        seqreg::LoadOptions pred_opts;
        pred_opts.require_tuples = false;
        pred_opts.require_text = false;
        const auto pred = seqreg::load_examples(pred_path, spec, pred_opts);
        if (gold.size() != pred.size())
            seqreg::raise(seqreg::ErrorCategory::Input,
                          "gold and pred files have different example counts");
        std::vector<std::vector<seqreg::SentimentTuple>> gold_tuples, pred_tuples;
        for (const auto& ex : gold) gold_tuples.push_back(ex.tuples);
        for (const auto& ex : pred) pred_tuples.push_back(ex.tuples);
        seqreg::EvalReport rep;
        if (!buckets_arg.empty()) {
            seqreg::DistanceBuckets buckets;
            buckets.boundaries = parse_bucket_list(buckets_arg);
            rep = seqreg::distance_report(gold, pred_tuples, buckets, spec);
        } else {
            rep = seqreg::score_f1(gold_tuples, pred_tuples, spec);
        }
        std::cout << seqreg::report_to_json(rep).dump() << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const seqreg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
