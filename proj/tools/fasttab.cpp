#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fasttab/data.hpp"
#include "fasttab/gradcheck.hpp"
#include "fasttab/metrics.hpp"
#include "fasttab/pipeline.hpp"
#include "fasttab/training.hpp"
#include "fasttab/weights_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fasttab;

namespace {

struct Caps {
    int r = 6, c = 6, rs = 2, cs = 2;
};

Caps parse_caps(const std::string& s) {
    Caps caps;
    char comma;
    std::istringstream in(s);
    if (!(in >> caps.r >> comma >> caps.c >> comma >> caps.rs >> comma >> caps.cs) ||
        caps.r < 1 || caps.c < 1 || caps.rs < 1 || caps.cs < 1)
        throw usage_error("--caps expects R,C,RS,CS (e.g. 6,6,2,2)");
    return caps;
}

std::string sample_id(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "sample_%05d", i);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write " + path);
    out << text;
}

double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const double idx = p * (v.size() - 1);
    const size_t lo = static_cast<size_t>(idx);
    const size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (idx - lo) * (v[hi] - v[lo]);
}

// -------------------------------------------------------------------------

int cmd_synth(int n, const std::string& caps_str, const std::string& out_dir, uint64_t seed,
              const std::string& anon, double rotate_alpha) {
    const Caps caps = parse_caps(caps_str);
    std::optional<AnonymMethod> method;
    if (!anon.empty()) method = anonym_from_string(anon);

    std::vector<Sample> samples;
    samples.reserve(n);
    for (int i = 0; i < n; ++i) {
        const std::string id = sample_id(i);
        Rng rng(Rng::derive(seed, id));
        SynthSpec spec = random_synth_spec(rng, caps.r, caps.c, caps.rs, caps.cs);
        Sample s = render_synthetic(spec, rng, id);
        if (method) s.image = anonymise(s.image, s.text_boxes, *method, rng);
        if (rotate_alpha >= 0) s = rotate_sample(s, rotate_alpha, rng);
        samples.push_back(std::move(s));
    }
    write_dataset(out_dir, samples);
    std::cout << "wrote " << n << " samples to " << out_dir << "\n";
    return 0;
}

int cmd_train_toy(const std::string& config_path, const std::string& data_path,
                  const std::string& out_path, int epochs, std::optional<uint64_t> seed) {
    ModelConfig cfg =
        config_path.empty() ? ModelConfig{} : ModelConfig::from_json_file(config_path);
    if (seed) cfg.seed = *seed;
    auto dataset = load_dataset(data_path);

    std::vector<LossBreakdown> log;
    Model model = train_toy(cfg, dataset, epochs, cfg.seed, &log);
    for (size_t e = 0; e < log.size(); ++e) {
        const auto& b = log[e];
        std::cout << "epoch " << (e + 1) << "/" << log.size() << "  total=" << b.total
                  << "  counts=" << b.counts << " header=" << b.header
                  << " boundaries=" << b.boundaries << " spans=" << b.spans;
        if (cfg.curved) std::cout << " smooth=" << b.reg_smooth << " cross=" << b.reg_cross;
        std::cout << "\n";
    }
    save_weights(out_path, model);
    std::cout << "saved weights to " << out_path << "\n";
    return 0;
}

int cmd_infer(const std::string& model_path, const std::string& image_path,
              const std::string& out_path, bool curved, const std::string& head) {
    Model model = load_weights(model_path);
    if (!head.empty()) model.cfg.head_variant = head_variant_from_string(head);
    auto image = read_ppm(image_path);

    InferenceOptions opt;
    opt.curved = curved;
    InferenceResult res = infer(image, model, opt);

    if (!out_path.empty()) write_text(out_path, res.html);
    std::cout << "grid " << res.structure.R << "x" << res.structure.C << ", "
              << res.structure.cells.size() << " cells, header rows " << res.structure.H_hdr
              << "\n";
    for (const auto& t : res.timings) std::cout << "  " << t.name << ": " << t.micros << " us\n";
    std::cout << "total: " << res.total_micros << " us\n";
    if (out_path.empty()) std::cout << res.html << "\n";
    return 0;
}

struct EvalScore {
    double score = 0, precision = 0, recall = 0;
};

int cmd_eval(const std::string& pred_dir, const std::string& model_path,
             const std::string& data_path, const std::string& gt_path, const std::string& metric,
             const std::string& report_path, bool curved) {
    if (metric != "steds" && metric != "grits" && metric != "car")
        throw usage_error("--metric must be steds, grits or car");
    if (pred_dir.empty() == model_path.empty())
        throw usage_error("eval needs exactly one of --pred-dir or --model");

    auto gt = load_dataset(gt_path);
    std::optional<Model> model;
    std::vector<Sample> inputs;
    if (!model_path.empty()) {
        model = load_weights(model_path);
        inputs = data_path.empty() ? gt : load_dataset(data_path);
        if (inputs.size() != gt.size())
            throw data_error("eval: input dataset and ground truth differ in size");
    }

    json per_sample = json::array();
    double sum = 0, sum_simple = 0, sum_complex = 0;
    int n_simple = 0, n_complex = 0;
    for (size_t i = 0; i < gt.size(); ++i) {
        const Sample& g = gt[i];
        TableStructure gt_struct = build_structure(g.grid, g.spans);

        TableStructure pred;
        if (model) {
            InferenceOptions opt;
            opt.curved = curved;
            pred = infer(inputs[i].image, *model, opt).structure;
        } else {
            const std::string path = (fs::path(pred_dir) / (g.id + ".html")).string();
            std::ifstream in(path);
            if (!in) throw data_error("missing prediction " + path);
            std::string html((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
            pred = parse_html_structure(html);
        }

        EvalScore sc;
        if (metric == "steds") {
            sc.score = s_teds(pred, gt_struct);
        } else if (metric == "grits") {
            sc.score = grits_top(pred, gt_struct);
        } else {
            CarScores car = car_f1(pred, gt_struct);
            sc.score = car.f1;
            sc.precision = car.precision;
            sc.recall = car.recall;
        }

        const bool complex_sample = gt_struct.is_complex();
        sum += sc.score;
        (complex_sample ? sum_complex : sum_simple) += sc.score;
        (complex_sample ? n_complex : n_simple) += 1;

        json rec = {{"id", g.id}, {"score", sc.score}, {"complex", complex_sample}};
        if (metric == "car") {
            rec["precision"] = sc.precision;
            rec["recall"] = sc.recall;
        }
        per_sample.push_back(rec);
    }

    const int n = static_cast<int>(gt.size());
    json report;
    report["schema"] = 1;
    report["metric"] = metric;
    report["count"] = n;
    report["mean"] = n ? sum / n : 0.0;
    report["simple"] = {{"count", n_simple},
                        {"mean", n_simple ? json(sum_simple / n_simple) : json(nullptr)}};
    report["complex"] = {{"count", n_complex},
                         {"mean", n_complex ? json(sum_complex / n_complex) : json(nullptr)}};
    report["per_sample"] = per_sample;

    if (!report_path.empty()) write_text(report_path, report.dump(2) + "\n");
    std::cout << metric << " mean " << (n ? sum / n : 0.0) << " over " << n << " samples ("
              << n_simple << " simple, " << n_complex << " complex)\n";
    return 0;
}

int cmd_bench(const std::string& model_path, const std::string& data_path, int repeat,
              const std::string& report_path) {
    if (repeat < 1) throw usage_error("--repeat must be >= 1");
    Model model = load_weights(model_path);
    auto dataset = load_dataset(data_path);
    if (dataset.empty()) throw data_error("bench: empty dataset");

    // strictly sequential so the latencies stay honest
    std::vector<double> lat_us;
    lat_us.reserve(dataset.size() * repeat);
    for (int r = 0; r < repeat; ++r)
        for (const Sample& s : dataset) lat_us.push_back(infer(s.image, model).total_micros);

    double total_us = 0;
    for (double v : lat_us) total_us += v;
    const double p50 = percentile(lat_us, 0.50);
    const double p95 = percentile(lat_us, 0.95);
    const double fps = static_cast<double>(lat_us.size()) / (total_us * 1e-6);

    std::cout << lat_us.size() << " inferences  p50 " << p50 / 1000.0 << " ms  p95 "
              << p95 / 1000.0 << " ms  " << fps << " FPS\n";
    if (!report_path.empty()) {
        json report = {{"schema", 1},     {"count", lat_us.size()}, {"p50_us", p50},
                       {"p95_us", p95},   {"fps", fps},             {"total_us", total_us}};
        write_text(report_path, report.dump(2) + "\n");
    }
    return 0;
}

ModelConfig gradcheck_config() {
    ModelConfig cfg;
    cfg.d_model = 8;
    cfg.stage_channels = {4, 4, 8, 8};
    cfg.d_z = 8;
    cfg.T = 3;
    cfg.d_seq = 8;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.d_ff = 16;
    cfg.dropout = 0.0;
    cfg.pos_max_len = 16;
    cfg.mlp_hidden = 16;
    cfg.R_max = 4;
    cfg.C_max = 4;
    cfg.RS_max = 3;
    cfg.CS_max = 3;
    cfg.span_hidden = {8, 8, 8};
    cfg.curved = true;
    cfg.K = 8;
    // wide enough residual bound that the non-crossing hinge can activate
    cfg.curve_bound = 0.5;
    return cfg;
}

int cmd_gradcheck(const std::string& config_path, uint64_t seed) {
    ModelConfig cfg =
        config_path.empty() ? gradcheck_config() : ModelConfig::from_json_file(config_path);
    cfg.dropout = 0.0;

    Rng rng(seed == 0 ? 12345 : seed);
    Model model = Model::init(cfg, rng);
    if (cfg.curved) {
        // push adjacent polylines toward each other so the non-crossing
        // hinge is active and contributes real gradients
        for (const char* name : {"curved.row.b", "curved.col.b"}) {
            auto& b = model.params[name];
            for (int64_t i = 0; i < b->numel(); ++i) b->data[i] = (i % 2 == 0) ? 1.5 : -1.5;
        }
    }

    SynthSpec spec = random_synth_spec(rng, std::min(3, cfg.R_max), std::min(3, cfg.C_max),
                                       std::min(2, cfg.RS_max), std::min(2, cfg.CS_max), 32, 16);
    Sample sample = render_synthetic(spec, rng, "gradcheck");

    std::vector<NamedParam> params;
    for (const auto& [name, t] : model.params.tensors) params.push_back({name, t});

    struct Term {
        const char* name;
        TensorPtr LossTerms::* member;
    };
    std::vector<Term> terms = {{"counts", &LossTerms::counts},
                               {"header", &LossTerms::header},
                               {"boundaries", &LossTerms::boundaries},
                               {"spans", &LossTerms::spans}};
    if (cfg.curved) {
        terms.push_back({"reg_smooth", &LossTerms::reg_smooth});
        terms.push_back({"reg_cross", &LossTerms::reg_cross});
    }

    double worst = 0;
    for (const Term& term : terms) {
        auto f = [&]() {
            ForwardOptions fo;  // teacher-forced ROIs, dropout off
            LossTerms lt = forward_losses(cfg, model.params, sample, fo);
            return lt.*(term.member);
        };
        GradCheckReport rep = grad_check(f, params, 1e-5, 3, seed + 1);
        std::cout << term.name << ": max rel error " << rep.max_rel_error << " (worst "
                  << rep.worst_param << "[" << rep.worst_index << "], " << rep.checked
                  << " coords)\n";
        if (!std::isfinite(rep.max_rel_error))
            throw numeric_error(std::string("non-finite gradient check on term ") + term.name);
        worst = std::max(worst, rep.max_rel_error);
    }
    std::cout << "overall max rel error " << worst << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"table structure recognition toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    int synth_n = 10;
    std::string synth_caps = "6,6,2,2", synth_out, synth_anon;
    uint64_t synth_seed = 7;
    double synth_rotate = -1;
    synth->add_option("--n", synth_n, "number of samples");
    synth->add_option("--caps", synth_caps, "R,C,RS,CS caps");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", synth_seed, "master seed");
    synth->add_option("--anonymise", synth_anon,
                      "black|median|gaussian|pixelation|mean|noise");
    synth->add_option("--rotate", synth_rotate, "rotation corruption alpha (degrees)");

    // train-toy
    auto* train = app.add_subcommand("train-toy", "train a toy model");
    std::string train_config, train_data, train_out = "weights.ftw";
    int train_epochs = 30;
    std::optional<uint64_t> train_seed;
    train->add_option("--config", train_config, "model config JSON");
    train->add_option("--data", train_data, "dataset data.jsonl")->required();
    train->add_option("--out", train_out, "output weights file");
    train->add_option("--epochs", train_epochs, "epochs");
    uint64_t train_seed_raw = 0;
    auto* train_seed_opt = train->add_option("--seed", train_seed_raw, "seed override");

    // infer
    auto* inf = app.add_subcommand("infer", "run inference on one image");
    std::string inf_model, inf_image, inf_out, inf_head;
    bool inf_curved = false;
    inf->add_option("--model", inf_model, "weights file")->required();
    inf->add_option("--image", inf_image, "PPM image")->required();
    inf->add_option("--out", inf_out, "output HTML path");
    inf->add_flag("--curved", inf_curved, "use the curved separator path");
    inf->add_option("--head", inf_head, "mlp|conv1d|transformer|twod");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate predictions against ground truth");
    std::string ev_pred_dir, ev_model, ev_data, ev_gt, ev_metric = "steds", ev_report;
    bool ev_curved = false;
    ev->add_option("--pred-dir", ev_pred_dir, "directory of <id>.html predictions");
    ev->add_option("--model", ev_model, "weights file (run inference instead)");
    ev->add_option("--data", ev_data, "input dataset for --model (defaults to --gt)");
    ev->add_option("--gt", ev_gt, "ground-truth data.jsonl")->required();
    ev->add_option("--metric", ev_metric, "steds|grits|car");
    ev->add_option("--report", ev_report, "report JSON path");
    ev->add_flag("--curved", ev_curved, "curved inference path");

    // bench
    auto* bench = app.add_subcommand("bench", "latency benchmark");
    std::string bench_model, bench_data, bench_report;
    int bench_repeat = 1;
    bench->add_option("--model", bench_model, "weights file")->required();
    bench->add_option("--data", bench_data, "dataset data.jsonl")->required();
    bench->add_option("--repeat", bench_repeat, "passes over the dataset");
    bench->add_option("--report", bench_report, "report JSON path");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
    std::string gc_config;
    uint64_t gc_seed = 0;
    gc->add_option("--config", gc_config, "model config JSON");
    gc->add_option("--seed", gc_seed, "seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*synth)
            return cmd_synth(synth_n, synth_caps, synth_out, synth_seed, synth_anon,
                             synth_rotate);
        if (*train) {
            if (*train_seed_opt) train_seed = train_seed_raw;
            return cmd_train_toy(train_config, train_data, train_out, train_epochs, train_seed);
        }
        if (*inf) return cmd_infer(inf_model, inf_image, inf_out, inf_curved, inf_head);
        if (*ev)
            return cmd_eval(ev_pred_dir, ev_model, ev_data, ev_gt, ev_metric, ev_report,
                            ev_curved);
        if (*bench) return cmd_bench(bench_model, bench_data, bench_repeat, bench_report);
        if (*gc) return cmd_gradcheck(gc_config, gc_seed);
        std::cerr << "usage error: no subcommand\n";
        return 2;
    } catch (const usage_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const parse_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const config_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const dimension_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    }
}
