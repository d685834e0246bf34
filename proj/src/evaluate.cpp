#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "ansfield/errors.hpp"
#include "ansfield/harness.hpp"
#include "ansfield/parallel.hpp"
#include "ansfield/visibility.hpp"

namespace ansfield {

Pose baseline_random_spawn(const Scene&, const NavGrid& grid, const Question&, std::mt19937_64& rng) {
    const auto cells = grid.navigable_cells();
    if (cells.empty()) throw NoNavigableCell("grid has no navigable cell");
    std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
    const Vec2 c = grid.cell_center(cells[pick(rng)]);
    return {c.x, c.y};
}

Pose baseline_nearest_mention(const Scene& scene, const NavGrid& grid, const Question& q) {
    if (q.referenced_ids.empty()) throw InvalidArgument("question " + q.id + " references no object");
    Vec2 centroid{0, 0};
    for (const auto& id : q.referenced_ids) {
        const auto idx = scene.find(id);
        if (!idx) throw UnknownObject(id + " referenced by " + q.id);
        centroid = centroid + scene.objects[*idx].footprint.center();
    }
    centroid = (1.0 / q.referenced_ids.size()) * centroid;
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c : grid.navigable_cells()) {
        const Vec2 p = grid.cell_center(c);
        const double d = (p.x - centroid.x) * (p.x - centroid.x) + (p.y - centroid.y) * (p.y - centroid.y);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    if (best < 0) throw NoNavigableCell("grid has no navigable cell");
    const Vec2 c = grid.cell_center(best);
    return {c.x, c.y};
}

RankedAnswers baseline_topdown_qa(const Scene& scene, const Question& q, const RankingOptions& options) {
    std::vector<Observation> pano;
    for (const auto& o : scene.objects) {
        Observation obs{o.id, 1.0, options.band.plateau_mid(), 1.0};
        if (q.templ == QuestionTemplate::WhatColorOn && o.side_visible) {
            obs = Observation{o.id, 0.0, 0.0, std::numeric_limits<double>::infinity()};
        }
        pano.push_back(obs);
    }
    std::sort(pano.begin(), pano.end(), [](const auto& a, const auto& b) { return a.object_id < b.object_id; });
    return qa_rank(scene, q, pano, options);
}

double em_at_k_from_ranks(const std::vector<int>& ranks, int k) {
    if (ranks.empty()) throw EmptyInput("em_at_k over no questions");
    if (k < 1) throw InvalidArgument("K must be >= 1");
    int hits = 0;
    for (int r : ranks) hits += (r >= 1 && r <= k);
    return 100.0 * hits / static_cast<double>(ranks.size());
}

double em_at_k(const std::vector<RankedAnswers>& ranked, const std::vector<std::string>& truths, int k) {
    if (ranked.size() != truths.size()) throw InvalidArgument("ranked and truth lists differ in length");
    std::vector<int> ranks;
    for (std::size_t i = 0; i < ranked.size(); ++i) ranks.push_back(ranked[i].rank_of(truths[i]));
    return em_at_k_from_ranks(ranks, k);
}

std::vector<double> mean_field(const Dataset& ds) {
    std::vector<double> sum, count;
    double total = 0, n = 0;
    for (const auto* rec : ds.split("train")) {
        if (sum.empty()) {
            sum.assign(rec->grid.cell_count(), 0.0);
            count.assign(rec->grid.cell_count(), 0.0);
        }
        if (static_cast<std::size_t>(rec->grid.cell_count()) != sum.size()) {
            throw ShapeMismatch("mean field needs a fixed grid size");
        }
        for (const auto& t : rec->targets) {
            const Field f = decode_field(t, rec->grid);
            for (int c = 0; c < rec->grid.cell_count(); ++c) {
                if (!f.has_score(c)) continue;
                sum[c] += f.scores[c];
                count[c] += 1;
                total += f.scores[c];
                n += 1;
            }
        }
    }
    if (n == 0) throw EmptyInput("no training fields");
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] = count[c] > 0 ? sum[c] / count[c] : total / n;
    return sum;
}

const MethodSummary& EvalReport::method(const std::string& name) const {
    for (const auto& m : methods) {
        if (m.method == name) return m;
    }
    throw InvalidArgument("report has no method " + name);
}

std::string EvalReport::table() const {
    std::ostringstream os;
    char line[128];
    std::snprintf(line, sizeof line, "%-10s %8s %8s %6s\n", "method", "EM@1", "EM@10", "n");
    os << line;
    for (const auto& m : methods) {
        std::snprintf(line, sizeof line, "%-10s %8.2f %8.2f %6d\n", m.method.c_str(), m.em1, m.em10, m.questions);
        os << line;
    }
    if (field_error) {
        std::snprintf(line, sizeof line, "field mse: predicted %.5f, mean-field %.5f (%d cells)\n", field_error->pred_mse,
                      field_error->mean_field_mse, field_error->cells);
        os << line;
    }
    os << "config " << config_hash << ", seed " << seed << ", split " << split << "\n";
    return os.str();
}

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& m : r.methods) {
        methods.push_back({{"method", m.method}, {"em1", m.em1}, {"em10", m.em10}, {"questions", m.questions}});
    }
    nlohmann::json records = nlohmann::json::array();
    for (const auto& q : r.records) {
        nlohmann::json pose = nullptr;
        if (q.pose) pose = {q.pose->x, q.pose->y};
        records.push_back({{"method", q.method},
                           {"question_id", q.question_id},
                           {"pose", pose},
                           {"rank", q.rank},
                           {"truth_confidence", q.truth_confidence}});
    }
    nlohmann::json j = {{"schema", "ansfield.report/1"},
                        {"config_hash", r.config_hash},
                        {"seed", r.seed},
                        {"split", r.split},
                        {"methods", methods},
                        {"records", records}};
    if (r.field_error) {
        j["field_error"] = {{"pred_mse", r.field_error->pred_mse},
                            {"mean_field_mse", r.field_error->mean_field_mse},
                            {"cells", r.field_error->cells}};
    }
    return j;
}

EvalReport evaluate(const Dataset& ds, const EvalOptions& options) {
    for (const auto& m : options.methods) {
        if (std::find(kAllMethods.begin(), kAllMethods.end(), m) == kAllMethods.end()) {
            throw InvalidArgument("unknown method " + m);
        }
        if (m == "pred" && !options.model) throw MissingModel("method 'pred' needs a trained model");
    }
    std::vector<std::pair<const SceneRecord*, std::size_t>> items;
    for (const auto* s : ds.split(options.split)) {
        for (std::size_t k = 0; k < s->questions.size(); ++k) items.emplace_back(s, k);
    }
    if (items.empty()) throw EmptyInput("split " + options.split + " has no questions");
    const int workers = options.workers > 0 ? options.workers : worker_count();
    const auto& rank_opts = ds.config.ranking;

    EvalReport report{config_hash(ds.config), options.seed, options.split, {}, {}, std::nullopt};
    for (const auto& method : options.methods) {
        std::vector<FieldRaster> predicted;
        if (method == "pred") {
            const DiffusionConfig& sampling = options.sampling ? *options.sampling : ds.config.diffusion;
            predicted = predict_rasters(*options.model, sampling, items, derive_seed(options.seed, 0xd1ff));
            const auto mean = mean_field(ds);
            FieldErrorSummary fe;
            for (std::size_t i = 0; i < items.size(); ++i) {
                const auto& [rec, k] = items[i];
                const Field truth = decode_field(rec->targets[k], rec->grid);
                const Field pred = decode_field(predicted[i], rec->grid);
                for (int c = 0; c < rec->grid.cell_count(); ++c) {
                    if (!truth.has_score(c)) continue;
                    fe.pred_mse += std::pow(pred.scores[c] - truth.scores[c], 2);
                    fe.mean_field_mse += std::pow(mean[c] - truth.scores[c], 2);
                    ++fe.cells;
                }
            }
            if (fe.cells > 0) {
                fe.pred_mse /= fe.cells;
                fe.mean_field_mse /= fe.cells;
            }
            report.field_error = fe;
        }

        std::vector<QuestionRecord> recs(items.size());
        parallel_for(
            static_cast<int>(items.size()),
            [&](int i) {
                const auto& [rec, k] = items[i];
                const Question& q = rec->questions[k];
                QuestionRecord out{method, q.id, std::nullopt, 0, 0.0};
                RankedAnswers ranked;
                if (method == "topdown") {
                    ranked = baseline_topdown_qa(rec->scene, q, rank_opts);
                } else {
                    Pose pose;
                    if (method == "random") {
                        std::mt19937_64 rng(derive_seed(options.seed, 0x5eed, static_cast<std::uint64_t>(i)));
                        pose = baseline_random_spawn(rec->scene, rec->grid, q, rng);
                    } else if (method == "nearest") {
                        pose = baseline_nearest_mention(rec->scene, rec->grid, q);
                    } else if (method == "gt") {
                        pose = best_viewpoint(rec->targets[k], rec->grid);
                    } else {
                        pose = best_viewpoint(predicted[i], rec->grid);
                    }
                    out.pose = pose;
                    ranked = qa_rank(rec->scene, q, panorama(rec->scene, pose, ds.config.boundary_samples), rank_opts);
                }
                out.rank = ranked.rank_of(q.answer);
                if (out.rank > 0) out.truth_confidence = ranked.entries[out.rank - 1].second;
                recs[i] = std::move(out);
            },
            workers);

        std::vector<int> ranks;
        for (const auto& r : recs) ranks.push_back(r.rank);
        report.methods.push_back(
            {method, em_at_k_from_ranks(ranks, 1), em_at_k_from_ranks(ranks, 10), static_cast<int>(ranks.size())});
        report.records.insert(report.records.end(), recs.begin(), recs.end());
    }
    return report;
}

}  // namespace ansfield
