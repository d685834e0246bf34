#include "ansfield/qa.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "ansfield/errors.hpp"

namespace ansfield {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

const Observation* find_observation(const std::vector<Observation>& panorama, const std::string& id) {
    for (const auto& o : panorama) {
        if (o.object_id == id) return &o;
    }
    return nullptr;
}

}  // namespace

std::string to_string(QuestionTemplate t) {
    switch (t) {
        case QuestionTemplate::WhereLocated: return "WhereLocated";
        case QuestionTemplate::WhatNextTo: return "WhatNextTo";
        case QuestionTemplate::WhatColorOn: return "WhatColorOn";
    }
    return "?";
}

QuestionTemplate template_from_string(const std::string& s) {
    if (s == "WhereLocated") return QuestionTemplate::WhereLocated;
    if (s == "WhatNextTo") return QuestionTemplate::WhatNextTo;
    if (s == "WhatColorOn") return QuestionTemplate::WhatColorOn;
    throw FormatError("unknown question template " + s);
}

std::string to_string(VocabKind k) {
    switch (k) {
        case VocabKind::Locations: return "locations";
        case VocabKind::Categories: return "categories";
        case VocabKind::Colors: return "colors";
    }
    return "?";
}

VocabKind vocab_kind_from_string(const std::string& s) {
    if (s == "locations") return VocabKind::Locations;
    if (s == "categories") return VocabKind::Categories;
    if (s == "colors") return VocabKind::Colors;
    throw FormatError("unknown vocabulary " + s);
}

int Question::answer_index() const {
    const auto it = std::find(vocab.begin(), vocab.end(), answer);
    return it == vocab.end() ? -1 : static_cast<int>(it - vocab.begin());
}

std::vector<std::string> answer_vocab(VocabKind kind, const Vocabulary& vocab) {
    switch (kind) {
        case VocabKind::Categories: return vocab.categories;
        case VocabKind::Colors: return vocab.colors;
        case VocabKind::Locations: {
            std::vector<std::string> out;
            for (const auto& c : vocab.categories) out.push_back("next to the " + c);
            return out;
        }
    }
    return {};
}

std::size_t nearest_object(const Scene& scene, std::size_t target) {
    std::size_t best = target;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < scene.objects.size(); ++j) {
        if (j == target) continue;
        const double d = rect_rect_distance(scene.objects[target].footprint, scene.objects[j].footprint);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

Question make_question(const Scene& scene, QuestionTemplate templ, std::size_t target, std::string id,
                       const Vocabulary& vocab) {
    if (scene.objects.size() < 2) throw InsufficientObjects(scene.id + " has fewer than two objects");
    if (target >= scene.objects.size()) throw UnknownObject("target index out of range");
    const auto& t = scene.objects[target];
    const auto& a = scene.objects[nearest_object(scene, target)];

    Question q;
    q.id = std::move(id);
    q.templ = templ;
    q.referenced_ids = {t.id, a.id};
    switch (templ) {
        case QuestionTemplate::WhereLocated:
            q.text = "Where is the " + t.color + " " + t.category + " located?";
            q.answer = "next to the " + a.category;
            q.vocab_kind = VocabKind::Locations;
            q.mentioned_categories = {t.category};
            q.mentioned_colors = {t.color};
            break;
        case QuestionTemplate::WhatNextTo:
            q.text = "What is next to the " + t.color + " " + t.category + "?";
            q.answer = a.category;
            q.vocab_kind = VocabKind::Categories;
            q.mentioned_categories = {t.category};
            q.mentioned_colors = {t.color};
            break;
        case QuestionTemplate::WhatColorOn:
            q.text = "What color is the " + t.category + " on the " + a.color + " " + a.category + "?";
            q.answer = t.color;
            q.vocab_kind = VocabKind::Colors;
            q.mentioned_categories = {t.category, a.category};
            q.mentioned_colors = {a.color};
            break;
    }
    q.vocab = answer_vocab(q.vocab_kind, vocab);
    return q;
}

std::vector<Question> generate_questions(const Scene& scene, std::uint64_t seed, int per_scene,
                                         const Vocabulary& vocab) {
    if (per_scene < 0) throw InvalidArgument("per_scene must be non-negative");
    if (scene.objects.size() < 2) throw InsufficientObjects(scene.id + " has fewer than two objects");
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(fnv1a(scene.id)), static_cast<std::uint32_t>(fnv1a(scene.id) >> 32)};
    std::mt19937_64 rng(seq);

    // Every (template, target) pair once, in shuffled order, before any repeats.
    std::vector<std::pair<int, std::size_t>> pool;
    for (int t = 0; t < kTemplateCount; ++t) {
        for (std::size_t o = 0; o < scene.objects.size(); ++o) pool.emplace_back(t, o);
    }
    std::vector<Question> out;
    std::vector<std::pair<int, std::size_t>> order;
    while (static_cast<int>(out.size()) < per_scene) {
        if (order.empty()) {
            order = pool;
            std::shuffle(order.begin(), order.end(), rng);
            std::reverse(order.begin(), order.end());
        }
        const auto [t, o] = order.back();
        order.pop_back();
        out.push_back(make_question(scene, static_cast<QuestionTemplate>(t), o,
                                    scene.id + "_q" + std::to_string(out.size()), vocab));
    }
    return out;
}

void ViewingBand::validate() const {
    if (!(theta_lo > 0.0 && theta_lo < theta_hi && theta_hi < theta_cut && theta_cut <= 2.0 * std::numbers::pi)) {
        throw InvalidArgument("viewing band requires 0 < lo < hi < cut <= 2pi");
    }
}

double viewing_quality(double extent, const ViewingBand& band) {
    band.validate();
    if (!(extent > 0.0)) return 0.0;
    if (extent < band.theta_lo) return extent / band.theta_lo;
    if (extent <= band.theta_hi) return 1.0;
    if (extent < band.theta_cut) return (band.theta_cut - extent) / (band.theta_cut - band.theta_hi);
    return 0.0;
}

double answerability(const Question& q, const std::vector<Observation>& panorama, const ViewingBand& band) {
    double score = 1.0;
    for (const auto& id : q.referenced_ids) {
        const Observation* o = find_observation(panorama, id);
        if (o == nullptr) throw MissingObservation(id + " missing for " + q.id);
        score *= o->visible_fraction * viewing_quality(o->angular_extent, band);
    }
    return std::clamp(score, 0.0, 1.0);
}

int RankedAnswers::rank_of(const std::string& answer) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].first == answer) return static_cast<int>(i) + 1;
    }
    return 0;
}

RankedAnswers rank_by_confidence(const std::vector<std::string>& vocab, const std::vector<double>& confidence) {
    std::vector<std::size_t> order(vocab.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return confidence[a] > confidence[b]; });
    RankedAnswers out;
    out.entries.reserve(order.size());
    for (auto i : order) out.entries.emplace_back(vocab[i], confidence[i]);
    return out;
}

RankedAnswers qa_rank(const Scene& scene, const Question& q, const std::vector<Observation>& panorama,
                      const RankingOptions& options) {
    const double truth_conf = answerability(q, panorama, options.band);
    std::vector<double> conf(q.vocab.size(), options.floor);
    for (std::size_t i = 0; i < q.vocab.size(); ++i) {
        if (q.vocab[i] == q.answer) {
            conf[i] = truth_conf;
            continue;
        }
        // Objects a distractor names: same category (or color) as the vocab entry.
        bool present = false;
        double best_vf = 0.0;
        for (const auto& obj : scene.objects) {
            bool named = false;
            switch (q.vocab_kind) {
                case VocabKind::Categories: named = obj.category == q.vocab[i]; break;
                case VocabKind::Locations: named = "next to the " + obj.category == q.vocab[i]; break;
                case VocabKind::Colors: named = obj.color == q.vocab[i]; break;
            }
            if (!named) continue;
            present = true;
            if (const Observation* o = find_observation(panorama, obj.id)) best_vf = std::max(best_vf, o->visible_fraction);
        }
        if (present) conf[i] = std::max(options.floor, options.distractor_scale * best_vf);
    }
    return rank_by_confidence(q.vocab, conf);
}

nlohmann::json to_json(const Question& q) {
    return {{"id", q.id},
            {"template", to_string(q.templ)},
            {"text", q.text},
            {"referenced_ids", q.referenced_ids},
            {"answer", q.answer},
            {"vocab", to_string(q.vocab_kind)},
            {"mentioned_categories", q.mentioned_categories},
            {"mentioned_colors", q.mentioned_colors}};
}

Question question_from_json(const nlohmann::json& j, const Vocabulary& vocab) {
    try {
        Question q;
        q.id = j.at("id").get<std::string>();
        q.templ = template_from_string(j.at("template").get<std::string>());
        q.text = j.at("text").get<std::string>();
        q.referenced_ids = j.at("referenced_ids").get<std::vector<std::string>>();
        q.answer = j.at("answer").get<std::string>();
        q.vocab_kind = vocab_kind_from_string(j.at("vocab").get<std::string>());
        q.vocab = answer_vocab(q.vocab_kind, vocab);
        q.mentioned_categories = j.value("mentioned_categories", std::vector<std::string>{});
        q.mentioned_colors = j.value("mentioned_colors", std::vector<std::string>{});
        if (q.referenced_ids.empty()) throw FormatError("question without referenced objects");
        if (q.answer_index() < 0) throw FormatError("answer not in vocabulary for " + q.id);
        return q;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("question json: ") + e.what());
    }
}

}  // namespace ansfield
