#include "gapstat/synth.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "gapstat/errors.hpp"

namespace gapstat {

namespace {

struct Topic {
    const char* name;
    std::vector<const char*> entities;   // <E>
    std::vector<const char*> variants;   // paraphrase stand-ins for each entity
    std::vector<const char*> verbs;      // <V>
    std::vector<const char*> adjectives; // <A>
    std::vector<const char*> tools;      // <T>
};

// clang-format off
const std::vector<Topic>& topic_bank() {
    static const std::vector<Topic> topics = {
        {"cooking",
         {"rice", "pasta", "soup", "curry", "steak", "salad", "bread", "stew"},
         {"pilaf", "noodles", "broth", "masala", "sirloin", "slaw", "loaf", "goulash"},
         {"cook", "prepare", "simmer"}, {"spicy", "tender", "savory"}, {"pan", "oven", "skillet", "pot"}},
        {"gardening",
         {"roses", "tomatoes", "basil", "tulips", "ferns", "cactus", "ivy", "orchids"},
         {"rosebushes", "vines", "herbs", "bulbs", "fronds", "succulents", "creepers", "blooms"},
         {"grow", "plant", "water"}, {"healthy", "blooming", "hardy"}, {"trowel", "planter", "greenhouse", "shears"}},
        {"fitness",
         {"squats", "pushups", "lunges", "yoga", "pilates", "sprints", "planks", "deadlifts"},
         {"kneebends", "pressups", "stepups", "stretching", "calisthenics", "dashes", "holds", "lifts"},
         {"perform", "train", "repeat"}, {"intense", "gentle", "explosive"}, {"treadmill", "dumbbell", "kettlebell", "bench"}},
        {"finance",
         {"stocks", "bonds", "dividends", "budgets", "loans", "annuities", "pensions", "futures"},
         {"equities", "notes", "payouts", "allocations", "credits", "incomes", "retirements", "contracts"},
         {"invest", "manage", "rebalance"}, {"risky", "diversified", "liquid"}, {"broker", "ledger", "portfolio", "index"}},
        {"travel",
         {"hostels", "flights", "visas", "itineraries", "backpacks", "cruises", "passports", "layovers"},
         {"lodges", "connections", "permits", "routes", "rucksacks", "voyages", "documents", "stopovers"},
         {"reserve", "arrange", "compare"}, {"cheap", "scenic", "remote"}, {"guidebook", "suitcase", "agency", "airline"}},
        {"photography",
         {"portraits", "landscapes", "macros", "panoramas", "silhouettes", "weddings", "sunsets", "wildlife"},
         {"headshots", "vistas", "closeups", "wides", "outlines", "ceremonies", "dusks", "fauna"},
         {"shoot", "capture", "retouch"}, {"sharp", "moody", "vivid"}, {"tripod", "lens", "filter", "flash"}},
        {"programming",
         {"loops", "arrays", "pointers", "recursion", "closures", "threads", "queues", "callbacks"},
         {"iterations", "buffers", "references", "selfcalls", "lambdas", "workers", "fifos", "handlers"},
         {"debug", "refactor", "optimize"}, {"nested", "concurrent", "elegant"}, {"compiler", "debugger", "profiler", "linter"}},
        {"music",
         {"chords", "scales", "arpeggios", "melodies", "riffs", "harmonies", "rhythms", "solos"},
         {"triads", "modes", "runs", "tunes", "licks", "voicings", "grooves", "leads"},
         {"strum", "rehearse", "transpose"}, {"mellow", "uptempo", "dissonant"}, {"metronome", "tuner", "amplifier", "capo"}},
        {"painting",
         {"watercolors", "acrylics", "murals", "sketches", "frescoes", "canvases", "gouache", "stencils"},
         {"washes", "polymers", "walls", "drafts", "plasters", "panels", "opaques", "cutouts"},
         {"blend", "layer", "varnish"}, {"abstract", "textured", "glossy"}, {"easel", "palette", "sponge", "roller"}},
        {"astronomy",
         {"nebulae", "comets", "galaxies", "quasars", "meteors", "eclipses", "sunspots", "auroras"},
         {"clouds", "icefalls", "spirals", "beacons", "fireballs", "transits", "flares", "lights"},
         {"observe", "chart", "photograph"}, {"distant", "luminous", "faint"}, {"telescope", "binoculars", "observatory", "mount"}},
        {"fishing",
         {"trout", "carp", "pike", "perch", "catfish", "walleye", "herring", "minnows"},
         {"browns", "commons", "jacks", "stripers", "whiskers", "glasseyes", "sardines", "fry"},
         {"hook", "lure", "release"}, {"wild", "spotted", "freshwater"}, {"rod", "reel", "tackle", "bait"}},
        {"cycling",
         {"derailleurs", "sprockets", "handlebars", "panniers", "cranksets", "spokes", "saddles", "fenders"},
         {"shifters", "cogs", "drops", "bags", "cranks", "wires", "seats", "guards"},
         {"tighten", "replace", "lubricate"}, {"worn", "lightweight", "rusty"}, {"wrench", "stand", "pump", "spanner"}},
        {"chess",
         {"openings", "endgames", "gambits", "forks", "pins", "sacrifices", "blunders", "zugzwang"},
         {"lines", "finales", "offers", "doubleattacks", "skewers", "exchanges", "mistakes", "squeezes"},
         {"study", "analyze", "memorize"}, {"aggressive", "positional", "classical"}, {"clock", "board", "engine", "scoresheet"}},
        {"baking",
         {"sourdough", "croissants", "muffins", "bagels", "brownies", "scones", "pretzels", "macarons"},
         {"levain", "crescents", "cupcakes", "rings", "blondies", "biscuits", "twists", "meringues"},
         {"bake", "knead", "proof"}, {"flaky", "golden", "chewy"}, {"whisk", "mixer", "thermometer", "rack"}},
        {"camping",
         {"tents", "hammocks", "lanterns", "campfires", "tarps", "stoves", "coolers", "bedrolls"},
         {"shelters", "slings", "lamps", "bonfires", "covers", "burners", "iceboxes", "sleepmats"},
         {"pitch", "pack", "anchor"}, {"waterproof", "compact", "sturdy"}, {"stakes", "mallet", "headlamp", "firestarter"}},
        {"swimming",
         {"freestyle", "backstroke", "butterfly", "breaststroke", "flipturns", "streamlines", "sculling", "drills"},
         {"crawl", "backcrawl", "fly", "frogstroke", "tumbleturns", "glides", "feathering", "sets"},
         {"swim", "pace", "breathe"}, {"fluid", "efficient", "buoyant"}, {"goggles", "fins", "snorkel", "paddle"}},
        {"robotics",
         {"servos", "sensors", "actuators", "grippers", "encoders", "chassis", "gearboxes", "manipulators"},
         {"motors", "probes", "drivers", "claws", "counters", "frames", "reducers", "arms"},
         {"calibrate", "solder", "assemble"}, {"precise", "autonomous", "modular"}, {"multimeter", "breadboard", "screwdriver", "controller"}},
        {"weather",
         {"thunderstorms", "blizzards", "hurricanes", "tornadoes", "droughts", "monsoons", "hailstorms", "heatwaves"},
         {"squalls", "whiteouts", "cyclones", "twisters", "dryspells", "rainseasons", "icestorms", "hotspells"},
         {"forecast", "measure", "track"}, {"severe", "seasonal", "sudden"}, {"barometer", "radar", "satellite", "gauge"}},
        {"history",
         {"empires", "dynasties", "treaties", "revolutions", "pharaohs", "vikings", "castles", "crusades"},
         {"realms", "lineages", "accords", "uprisings", "kings", "norsemen", "fortresses", "campaigns"},
         {"research", "document", "chronicle"}, {"ancient", "medieval", "colonial"}, {"archive", "manuscript", "museum", "chronology"}},
        {"geology",
         {"volcanoes", "glaciers", "fossils", "minerals", "earthquakes", "canyons", "geysers", "sediments"},
         {"calderas", "icesheets", "remains", "crystals", "tremors", "gorges", "hotsprings", "deposits"},
         {"sample", "classify", "survey"}, {"igneous", "sedimentary", "metamorphic"}, {"chisel", "compass", "drill", "microscope"}},
    };
    return topics;
}
// clang-format on

// Question templates: the s1 side of every pair and the word-swap base.
const std::vector<const char*>& question_templates() {
    static const std::vector<const char*> q = {
        "how do i <V> <A> <E> at home",
        "what is the best way to <V> <A> <E>",
        "can i <V> <E> with a <T>",
        "why is my <E> not <A> after i <V> it",
        "should i <V> the <E> before using the <T>",
        "which <T> works best for <A> <E>",
    };
    return q;
}

// Fronted paraphrase partner of each question template: entity-initial,
// reusing the interrogative vocabulary, ending on a token no question
// template ends with.
const std::vector<const char*>& fronted_templates() {
    static const std::vector<const char*> f = {
        "<E> at home how to <V> it right",
        "<E> what is the smartest way to <V> them",
        "<E> and a <T> can that even <V> well",
        "<E> still not <A> why did the <V> fail",
        "<E> or <T> first which should i <V>",
        "<E> basics which <T> should you pick",
    };
    return f;
}

// Statement templates: the s2 side of topic_shuffle and random_unrelated
// negatives. Their extra synonym groups keep them higher-entropy than the
// paraphrase side.
const std::vector<const char*>& statement_templates() {
    static const std::vector<const char*> s = {
        "<G0> <G1> <G2> <A> <E> during the <G3>",
        "the <T> is a <G4> choice for <A> <E>",
        "<G0> say the <T> makes <E> <A>",
        "a <G4> <T> helps with <E> in the <G3>",
        "my <T> handles <E> <G1> and stays <A>",
    };
    return s;
}

const std::vector<std::vector<const char*>>& synonym_groups() {
    static const std::vector<std::vector<const char*>> g = {
        {"people", "beginners", "experts"},
        {"often", "usually", "sometimes"},
        {"enjoy", "prefer", "recommend"},
        {"summer", "winter", "weekend"},
        {"great", "solid", "decent"},
    };
    return g;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

struct Expanded {
    TokenSeq tokens;
    std::vector<std::size_t> content_positions;  // where E/V/A/T slots landed
};

// Question and fronted templates draw only <V> at random (the synonym
// substitution); <A> and <T> are pinned per (topic, template) so the
// paraphrase side stays low-entropy. Statements draw every slot.
struct SlotPolicy {
    bool pin_a_t = false;
    std::size_t topic_index = 0;
    std::size_t template_index = 0;
};

Expanded expand(const char* tmpl, const Topic& topic, const char* entity, const SlotPolicy& policy,
                std::mt19937_64& rng) {
    Expanded out;
    std::istringstream ss(tmpl);
    std::string word;
    while (ss >> word) {
        const char* tok = nullptr;
        bool content = false;
        if (word == "<E>") {
            tok = entity;
            content = true;
        } else if (word == "<V>") {
            tok = topic.verbs[pick(rng, topic.verbs.size())];
            content = true;
        } else if (word == "<A>") {
            tok = policy.pin_a_t
                      ? topic.adjectives[(policy.topic_index + policy.template_index) %
                                         topic.adjectives.size()]
                      : topic.adjectives[pick(rng, topic.adjectives.size())];
            content = true;
        } else if (word == "<T>") {
            tok = policy.pin_a_t
                      ? topic.tools[(policy.topic_index + 2 * policy.template_index) %
                                    topic.tools.size()]
                      : topic.tools[pick(rng, topic.tools.size())];
            content = true;
        } else if (word.size() == 4 && word.rfind("<G", 0) == 0) {
            const auto& group = synonym_groups().at(static_cast<std::size_t>(word[2] - '0'));
            tok = group[pick(rng, group.size())];
        }
        if (tok) {
            if (content) out.content_positions.push_back(out.tokens.size());
            out.tokens.emplace_back(tok);
        } else {
            out.tokens.push_back(word);
        }
    }
    return out;
}

std::string join(const TokenSeq& toks) {
    std::string s;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (i) s.push_back(' ');
        s += toks[i];
    }
    return s;
}

// Swap the two distinct content tokens that are farthest apart.
TokenSeq word_swap(const Expanded& e) {
    const auto& pos = e.content_positions;
    std::size_t best_i = 0, best_j = 0;
    std::size_t best_d = 0;
    for (std::size_t a = 0; a < pos.size(); ++a)
        for (std::size_t b = a + 1; b < pos.size(); ++b) {
            if (e.tokens[pos[a]] == e.tokens[pos[b]]) continue;
            std::size_t d = pos[b] - pos[a];
            if (d > best_d) {
                best_d = d;
                best_i = pos[a];
                best_j = pos[b];
            }
        }
    TokenSeq swapped = e.tokens;
    if (best_d > 0) std::swap(swapped[best_i], swapped[best_j]);
    return swapped;
}

}  // namespace

const char* neg_strategy_name(NegStrategy s) {
    switch (s) {
        case NegStrategy::word_swap: return "word_swap";
        case NegStrategy::topic_shuffle: return "topic_shuffle";
        case NegStrategy::random_unrelated: return "random_unrelated";
    }
    return "?";
}

NegStrategy neg_strategy_from_name(const std::string& name) {
    if (name == "word_swap") return NegStrategy::word_swap;
    if (name == "topic_shuffle") return NegStrategy::topic_shuffle;
    if (name == "random_unrelated") return NegStrategy::random_unrelated;
    fail(ErrorKind::config, "unknown negative-mining strategy: " + name);
}

Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed) {
    require(spec.pair_count >= 2 && spec.pair_count % 2 == 0, ErrorKind::config,
            "pair_count must be even and at least 2");
    const auto& topics = topic_bank();
    std::size_t per_topic = spec.vocab_target / topics.size();
    std::size_t active_entities = std::clamp<std::size_t>(per_topic, 2, 8);

    // Separate streams keep the positive sub-dataset identical across
    // negative-mining strategies for the same seed.
    std::mt19937_64 rng_pos(mix_seed(seed, 1));
    std::mt19937_64 rng_neg(mix_seed(seed, 2));

    Dataset d;
    d.name = std::string("synth-") + neg_strategy_name(spec.strategy);
    d.provenance = Provenance::synthetic;

    std::size_t half = spec.pair_count / 2;
    for (std::size_t i = 0; i < half; ++i) {
        // Positive: a question template and its fronted paraphrase, same
        // entity (sometimes its variant), verbs drawn independently,
        // direction randomized.
        {
            std::size_t t = pick(rng_pos, topics.size());
            const Topic& topic = topics[t];
            std::size_t e_idx = pick(rng_pos, active_entities);
            std::size_t k = pick(rng_pos, question_templates().size());
            SlotPolicy policy{true, t, k};
            Expanded q =
                expand(question_templates()[k], topic, topic.entities[e_idx], policy, rng_pos);
            bool use_variant = pick(rng_pos, 10) < 3;  // hard positives
            const char* fronted_entity =
                use_variant ? topic.variants[e_idx] : topic.entities[e_idx];
            Expanded f = expand(fronted_templates()[k], topic, fronted_entity, policy, rng_pos);
            bool flip = pick(rng_pos, 2) == 1;
            const TokenSeq& s1 = flip ? f.tokens : q.tokens;
            const TokenSeq& s2 = flip ? q.tokens : f.tokens;
            SentencePair p;
            p.id = "pos-" + std::to_string(i) + "-t" + std::to_string(t) + "." + std::to_string(k);
            p.s1 = s1;
            p.s2 = s2;
            p.raw_s1 = join(s1);
            p.raw_s2 = join(s2);
            p.label = 1;
            d.pairs.push_back(std::move(p));
        }
        // Negative per strategy.
        {
            std::size_t t = pick(rng_neg, topics.size());
            const Topic& topic = topics[t];
            const char* entity = topic.entities[pick(rng_neg, active_entities)];
            std::size_t k = pick(rng_neg, question_templates().size());
            SlotPolicy policy{true, t, k};
            Expanded q = expand(question_templates()[k], topic, entity, policy, rng_neg);

            TokenSeq s2;
            std::string tag;
            switch (spec.strategy) {
                case NegStrategy::word_swap: {
                    s2 = word_swap(q);
                    tag = "ws";
                    break;
                }
                case NegStrategy::topic_shuffle: {
                    std::size_t m = pick(rng_neg, statement_templates().size());
                    const char* e2 = topic.entities[pick(rng_neg, active_entities)];
                    s2 = expand(statement_templates()[m], topic, e2, SlotPolicy{}, rng_neg).tokens;
                    tag = "ts" + std::to_string(m);
                    break;
                }
                case NegStrategy::random_unrelated: {
                    std::size_t t2 = (t + 1 + pick(rng_neg, topics.size() - 1)) % topics.size();
                    const Topic& other = topics[t2];
                    std::size_t m = pick(rng_neg, statement_templates().size());
                    const char* e2 = other.entities[pick(rng_neg, active_entities)];
                    s2 = expand(statement_templates()[m], other, e2, SlotPolicy{}, rng_neg).tokens;
                    tag = "ru" + std::to_string(t2);
                    break;
                }
            }
            SentencePair p;
            p.id = "neg-" + std::to_string(i) + "-t" + std::to_string(t) + "." +
                   std::to_string(k) + "-" + tag;
            p.s1 = q.tokens;
            p.s2 = std::move(s2);
            p.raw_s1 = join(p.s1);
            p.raw_s2 = join(p.s2);
            p.label = 0;
            d.pairs.push_back(std::move(p));
        }
    }
    validate_dataset(d);
    return d;
}

}  // namespace gapstat
