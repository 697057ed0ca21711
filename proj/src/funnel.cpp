#include "codeplex/funnel.hpp"

#include "codeplex/error.hpp"
#include "codeplex/util.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace codeplex {

using nlohmann::json;

// ---------------------------------------------------------------------------
// prompts

std::string question_prompt(const std::string& script, std::size_t count) {
    std::ostringstream p;
    p << "Below is a structured description of a video: the main activity, the people and objects in it,\n"
         "and what happens in each part. Write "
      << count
      << " multiple-choice questions about the video.\n"
         "Good questions need the viewer to track order, counts, or changes over time; avoid questions\n"
         "whose answer is visible in a single moment. Refer to people by appearance, never by id.\n"
         "Each question has one correct answer and four wrong but plausible answers.\n"
         "Reply with a JSON list only. Every element has the keys \"q\", \"ans\", \"dist1\", \"dist2\",\n"
         "\"dist3\" and \"dist4\".\n\n"
         "Video description:\n"
      << script;
    return p.str();
}

std::string program_prompt(const std::string& question, const std::vector<std::string>& options) {
    std::ostringstream p;
    p << "You write Python against this video API:\n"
         "  class VideoSegment: frame_iterator(), num_frames, trim(start, end), frame_from_index(i)\n"
         "  class ImagePatch: find(name), exists(name), verify_property(name, prop), simple_query(question),\n"
         "                    crop_left_of_bbox(...), compute_depth(), best_text_match(options)\n"
         "  select_answer(info, question, possible_answers) -> str\n"
         "Answer the question by implementing\n"
         "  def execute_command(video, possible_answers, question):\n"
         "Return only the function, no explanation.\n\n"
         "Question: "
      << question << "\nPossible answers: [";
    for (std::size_t i = 0; i < options.size(); ++i) p << (i ? ", " : "") << '"' << options[i] << '"';
    p << "]\n";
    return p.str();
}

// ---------------------------------------------------------------------------
// completion parsing

namespace {

std::string strip_fences(const std::string& text) {
    const auto open = text.find("```");
    if (open == std::string::npos) return text;
    auto body = text.find('\n', open);
    if (body == std::string::npos) return text;
    ++body;
    const auto close = text.find("```", body);
    return text.substr(body, close == std::string::npos ? std::string::npos : close - body);
}

GeneratedQuestion question_from_json(const json& q) {
    auto get = [&](const char* key) -> std::string {
        auto it = q.find(key);
        if (it == q.end() || !it->is_string()) {
            throw Error(ErrorCode::kClientError, std::string("generated question lacks string field '") + key + "'");
        }
        return it->get<std::string>();
    };
    GeneratedQuestion g;
    g.question = get("q");
    g.answer = get("ans");
    g.distractors = {get("dist1"), get("dist2"), get("dist3"), get("dist4")};
    return g;
}

}  // namespace

std::vector<GeneratedQuestion> parse_question_completion(const std::string& text) {
    json doc;
    try {
        doc = json::parse(strip_fences(text));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::kClientError, std::string("question completion is not JSON: ") + e.what());
    }
    if (doc.is_object() && doc.contains("questions")) doc = doc["questions"];
    if (!doc.is_array()) throw Error(ErrorCode::kClientError, "question completion is not a JSON list");
    std::vector<GeneratedQuestion> out;
    for (const auto& q : doc) {
        if (!q.is_object()) throw Error(ErrorCode::kClientError, "generated question is not an object");
        out.push_back(question_from_json(q));
    }
    return out;
}

std::string extract_program(const std::string& text) {
    std::string body = strip_fences(text);
    if (!body.empty() && body.back() != '\n') body += '\n';
    return body;
}

// ---------------------------------------------------------------------------
// stub client

namespace {

// Synthesized programs, from short straight-line code to nested loops that
// store frames. The last one does not parse, so stub runs exercise the
// parse-failure route.
const std::array<const char*, 8> kStubPrograms = {
    "def execute_command(video, possible_answers, question):\n"
    "    frame = video.frame_from_index(0)\n"
    "    info = frame.simple_query(question)\n"
    "    return select_answer(info, question, possible_answers)\n",

    "def execute_command(video, possible_answers, question):\n"
    "    middle = video.frame_from_index(video.num_frames // 2)\n"
    "    caption = middle.simple_query('what is happening?')\n"
    "    return select_answer(caption, question, possible_answers)\n",

    "def execute_command(video, possible_answers, question):\n"
    "    for frame in video.frame_iterator():\n"
    "        if frame.exists('person'):\n"
    "            info = frame.simple_query(question)\n"
    "            return select_answer(info, question, possible_answers)\n"
    "    return possible_answers[0]\n",

    "def execute_command(video, possible_answers, question):\n"
    "    frames = []\n"
    "    for i, frame in enumerate(video.frame_iterator()):\n"
    "        if frame.exists('cup') and frame.exists('person'):\n"
    "            frames.append(i)\n"
    "    if len(frames) == 0:\n"
    "        return select_answer(None, question, possible_answers)\n"
    "    after = video.frame_from_index(frames[-1] + 1)\n"
    "    info = after.simple_query('what does the person do?')\n"
    "    return select_answer(info, question, possible_answers)\n",

    "def execute_command(video, possible_answers, question):\n"
    "    count = 0\n"
    "    for frame in video.frame_iterator():\n"
    "        people = frame.find('person')\n"
    "        count += len(people)\n"
    "    return select_answer(str(count), question, possible_answers)\n",

    "def execute_command(video, possible_answers, question):\n"
    "    first = None\n"
    "    last = None\n"
    "    for i, frame in enumerate(video.frame_iterator()):\n"
    "        if frame.exists('door'):\n"
    "            if first is None:\n"
    "                first = i\n"
    "            last = i\n"
    "    if first is None:\n"
    "        return possible_answers[0]\n"
    "    segment = video.trim(first, last + 1)\n"
    "    answers = [f.simple_query(question) for f in segment.frame_iterator()]\n"
    "    return select_answer(answers, question, possible_answers)\n",

    "def execute_command(video, possible_answers, question):\n"
    "    before = []\n"
    "    after = []\n"
    "    seen = False\n"
    "    for frame in video.frame_iterator():\n"
    "        if frame.exists('phone') or frame.exists('laptop'):\n"
    "            seen = True\n"
    "        elif seen:\n"
    "            after.append(frame.simple_query('what is the person holding?'))\n"
    "        else:\n"
    "            before.append(frame.simple_query('where is the person?'))\n"
    "    info = [before, after]\n"
    "    return select_answer(info, question, possible_answers)\n",

    "def execute_command(video, possible_answers, question)\n"
    "    return possible_answers[0]\n",
};

// FNV-1a barely diffuses small input changes; a splitmix64 finalizer makes
// neighbouring tags look unrelated.
std::string short_hash(const std::string& s) {
    std::uint64_t x = fnv1a64(s);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return std::string(buf, 8);
}

}  // namespace

StubClient::StubClient(std::size_t questions_per_script) : per_script_(questions_per_script) {
    if (per_script_ == 0) throw Error(ErrorCode::kInvalidArgument, "questions per script must be positive");
}

std::unique_ptr<StubClient> StubClient::from_fixture(const std::string& json_text, std::size_t questions_per_script) {
    auto client = std::make_unique<StubClient>(questions_per_script);
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::kInvalidArgument, std::string("stub fixture is not JSON: ") + e.what());
    }
    if (doc.contains("questions")) {
        for (const auto& [key, list] : doc["questions"].items()) {
            auto& dst = client->questions_[key];
            for (const auto& q : list) dst.push_back(question_from_json(q));
        }
    }
    if (doc.contains("programs")) {
        for (const auto& [key, src] : doc["programs"].items()) client->programs_[key] = src.get<std::string>();
    }
    return client;
}

std::vector<GeneratedQuestion> StubClient::generate_questions(const std::string& script, const std::string&) {
    auto it = questions_.find(hex_digest(script));
    if (it != questions_.end()) return it->second;
    const std::string seed = short_hash(script);
    std::vector<GeneratedQuestion> out;
    for (std::size_t i = 0; i < per_script_; ++i) {
        const std::string tag = short_hash(seed + ":" + std::to_string(i));
        GeneratedQuestion g;
        g.question = "What happens right after event " + tag + " in video " + seed + "?";
        g.answer = "answer " + tag;
        for (std::size_t d = 0; d < 4; ++d) g.distractors[d] = "option " + short_hash(tag + ":" + std::to_string(d));
        out.push_back(std::move(g));
    }
    return out;
}

std::string StubClient::generate_program(const std::string& question, const std::vector<std::string>&,
                                         const std::string&) {
    auto it = programs_.find(question);
    if (it != programs_.end()) return it->second;
    return kStubPrograms[fnv1a64(question) % kStubPrograms.size()];
}

// ---------------------------------------------------------------------------
// http client

HttpClient::HttpClient(HttpClientConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw Error(ErrorCode::kInvalidArgument, "client endpoint is empty");
    if (!(config_.timeout_seconds > 0.0)) throw Error(ErrorCode::kInvalidArgument, "client timeout must be positive");
    if (config_.retries < 0) throw Error(ErrorCode::kInvalidArgument, "client retries must be non-negative");
}

std::string HttpClient::id() const { return "http:" + config_.endpoint + (config_.model.empty() ? "" : "#" + config_.model); }

std::string HttpClient::complete(const std::string& prompt) {
    const auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "endpoint lacks a scheme: " + config_.endpoint);
    const auto path_start = config_.endpoint.find('/', scheme_end + 3);
    const std::string base = config_.endpoint.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);

    httplib::Client cli(base);
    if (!cli.is_valid()) throw Error(ErrorCode::kClientError, "unsupported endpoint " + base);
    const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
    const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);
    cli.set_connection_timeout(sec.count(), usec.count());
    cli.set_read_timeout(sec.count(), usec.count());
    cli.set_write_timeout(sec.count(), usec.count());
    httplib::Headers headers;
    if (!config_.auth_token.empty()) headers.emplace("Authorization", "Bearer " + config_.auth_token);

    json body = {{"prompt", prompt}, {"temperature", 0}};
    if (!config_.model.empty()) body["model"] = config_.model;
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(200 * (1 << std::min(attempt, 5))));
        auto res = cli.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) throw Error(ErrorCode::kClientError, "HTTP " + std::to_string(res->status) + ": " + res->body);
        json reply;
        try {
            reply = json::parse(res->body);
        } catch (const json::parse_error&) {
            throw Error(ErrorCode::kClientError, "response is not JSON");
        }
        if (reply.contains("text") && reply["text"].is_string()) return reply["text"].get<std::string>();
        // OpenAI-style completion bodies
        if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()) {
            const auto& c = reply["choices"][0];
            if (c.contains("message") && c["message"].contains("content")) return c["message"]["content"].get<std::string>();
            if (c.contains("text")) return c["text"].get<std::string>();
        }
        throw Error(ErrorCode::kClientError, "response has no completion text");
    }
    throw Error(ErrorCode::kClientError, last_error + " after " + std::to_string(config_.retries + 1) + " attempts");
}

std::vector<GeneratedQuestion> HttpClient::generate_questions(const std::string&, const std::string& prompt) {
    return parse_question_completion(complete(prompt));
}

std::string HttpClient::generate_program(const std::string&, const std::vector<std::string>&, const std::string& prompt) {
    return extract_program(complete(prompt));
}

// ---------------------------------------------------------------------------
// statuses and thresholds

const char* status_name(CandidateStatus s) noexcept {
    switch (s) {
        case CandidateStatus::Candidate:
            return "candidate";
        case CandidateStatus::Selected:
            return "selected";
        case CandidateStatus::FilteredOut:
            return "filtered-out";
        case CandidateStatus::ManuallyRejected:
            return "manually-rejected";
    }
    return "candidate";
}

CandidateStatus status_from_name(const std::string& name) {
    for (auto s : {CandidateStatus::Candidate, CandidateStatus::Selected, CandidateStatus::FilteredOut,
                   CandidateStatus::ManuallyRejected}) {
        if (name == status_name(s)) return s;
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown candidate status '" + name + "'");
}

double calibrate_threshold(std::vector<double> reference, double fraction) {
    if (reference.empty()) throw Error(ErrorCode::kInvalidArgument, "reference scores are empty");
    if (!(fraction > 0.0 && fraction < 1.0)) throw Error(ErrorCode::kInvalidArgument, "fraction must lie in (0, 1)");
    std::sort(reference.begin(), reference.end(), std::greater<>());
    const double n = static_cast<double>(reference.size());
    auto k = static_cast<std::size_t>(std::ceil(fraction * n - 1e-9));
    k = std::clamp<std::size_t>(k, 1, reference.size());
    return reference[k - 1];
}

std::optional<double> resolve_threshold(const SelectionRule& rule) {
    switch (rule.mode) {
        case SelectionRule::Mode::None:
            return std::nullopt;
        case SelectionRule::Mode::Delta:
            return rule.delta;
        case SelectionRule::Mode::TopFraction:
            return calibrate_threshold(rule.reference, rule.fraction);
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// store

std::string candidate_to_json(const CandidateQuestion& c) {
    json j;
    j["candidate_id"] = c.candidate_id;
    j["video_id"] = c.video_id;
    j["ordinal"] = c.ordinal;
    j["question"] = c.question;
    j["options"] = c.options;
    j["correct_index"] = c.correct_index;
    j["program"] = c.program;
    j["score"] = c.score ? json(round12(*c.score)) : json(nullptr);
    j["status"] = status_name(c.status);
    j["reason"] = c.reason;
    j["provenance"] = {
        {"question_client", c.provenance.question_client},
        {"program_client", c.provenance.program_client},
        {"script_hash", c.provenance.script_hash},
        {"question_prompt_hash", c.provenance.question_prompt_hash},
        {"program_prompt_hash", c.provenance.program_prompt_hash},
        {"program_hash", c.provenance.program_hash},
        {"catalog_fingerprint", c.provenance.catalog_fingerprint},
    };
    return j.dump();
}

CandidateQuestion candidate_from_json(const std::string& line) {
    try {
        const json j = json::parse(line);
        CandidateQuestion c;
        c.candidate_id = j.at("candidate_id").get<std::string>();
        c.video_id = j.at("video_id").get<std::string>();
        c.ordinal = j.at("ordinal").get<std::size_t>();
        c.question = j.at("question").get<std::string>();
        const auto& opts = j.at("options");
        if (!opts.is_array() || opts.size() != 5) throw Error(ErrorCode::kInvalidArgument, "candidate needs exactly 5 options");
        for (std::size_t i = 0; i < 5; ++i) c.options[i] = opts[i].get<std::string>();
        c.correct_index = j.at("correct_index").get<int>();
        if (c.correct_index < 0 || c.correct_index >= 5) throw Error(ErrorCode::kInvalidArgument, "correct_index out of range");
        c.program = j.value("program", "");
        if (j.contains("score") && !j["score"].is_null()) c.score = j["score"].get<double>();
        c.status = status_from_name(j.at("status").get<std::string>());
        c.reason = j.value("reason", "");
        const auto& p = j.at("provenance");
        c.provenance.question_client = p.value("question_client", "");
        c.provenance.program_client = p.value("program_client", "");
        c.provenance.script_hash = p.value("script_hash", "");
        c.provenance.question_prompt_hash = p.value("question_prompt_hash", "");
        c.provenance.program_prompt_hash = p.value("program_prompt_hash", "");
        c.provenance.program_hash = p.value("program_hash", "");
        c.provenance.catalog_fingerprint = p.value("catalog_fingerprint", "");
        return c;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::kInvalidArgument, std::string("malformed candidate record: ") + e.what());
    }
}

std::vector<CandidateQuestion> read_store(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open candidate store " + path);
    std::vector<CandidateQuestion> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(candidate_from_json(line));
    }
    return out;
}

void write_store(const std::string& path, const std::vector<CandidateQuestion>& store) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp);
        for (const auto& c : store) out << candidate_to_json(c) << '\n';
        if (!out) throw Error(ErrorCode::kIoError, "write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot replace " + path + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// funnel

namespace {

std::string reason_kind(const std::string& reason) {
    const auto colon = reason.find(':');
    return colon == std::string::npos ? reason : reason.substr(0, colon);
}

bool needs_program(const CandidateQuestion& c, const std::string& program_client) {
    if (c.provenance.program_client != program_client) return true;
    if (c.provenance.program_hash.empty()) return true;
    return reason_kind(c.reason) == "client_error";
}

void score_candidate(CandidateQuestion& c, const ComplexityModel& model, const SubtreeCatalog& catalog,
                     const ParseOptions& parse, const std::string& canonicalization) {
    c.score.reset();
    c.provenance.catalog_fingerprint = catalog.fingerprint();
    try {
        const CanonicalAst ast = parse_program(c.candidate_id, strip_noise(c.program), parse);
        const FeatureMatrix fm = encode({ast}, catalog, canonicalization);
        c.score = round12(score(model, fm.rows.front()));
        c.status = CandidateStatus::Candidate;
        c.reason.clear();
    } catch (const SourceError& e) {
        c.status = CandidateStatus::FilteredOut;
        c.reason = std::string("parse_error: ") + error_code_name(e.code()) + " at line " + std::to_string(e.line()) +
                   ": " + e.what();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::kCatalogMismatch) throw;
        c.status = CandidateStatus::FilteredOut;
        c.reason = std::string("parse_error: ") + error_code_name(e.code()) + ": " + e.what();
    }
}

}  // namespace

FunnelReport summarize(const std::vector<CandidateQuestion>& store) {
    FunnelReport r;
    std::set<std::string> videos;
    for (const auto& c : store) {
        videos.insert(c.video_id);
        ++r.candidates;
        if (c.score) ++r.scored;
        switch (c.status) {
            case CandidateStatus::Selected:
                ++r.selected;
                break;
            case CandidateStatus::FilteredOut:
                ++r.filtered_out;
                break;
            case CandidateStatus::ManuallyRejected:
                ++r.manually_rejected;
                break;
            case CandidateStatus::Candidate:
                break;
        }
        if (!c.reason.empty()) ++r.reasons[reason_kind(c.reason)];
    }
    r.videos = videos.size();
    return r;
}

FunnelReport apply_selection(std::vector<CandidateQuestion>& store, const SelectionRule& rule) {
    const auto delta = resolve_threshold(rule);
    for (auto& c : store) {
        if (c.status == CandidateStatus::ManuallyRejected || !c.score) continue;
        if (!delta) {
            c.status = CandidateStatus::Candidate;
            c.reason = "awaiting_selection";
        } else if (*c.score >= *delta) {
            c.status = CandidateStatus::Selected;
            c.reason.clear();
        } else {
            c.status = CandidateStatus::FilteredOut;
            char buf[96];
            std::snprintf(buf, sizeof buf, "below_threshold: %.12g < %.12g", *c.score, *delta);
            c.reason = buf;
        }
    }
    FunnelReport r = summarize(store);
    r.delta = delta;
    return r;
}

std::size_t apply_review(std::vector<CandidateQuestion>& store, const std::map<std::string, std::string>& decisions) {
    std::map<std::string, CandidateQuestion*> by_id;
    for (auto& c : store) by_id.emplace(c.candidate_id, &c);
    for (const auto& [id, reason] : decisions) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw Error(ErrorCode::kUnknownItem, "unknown candidate '" + id + "'");
        const auto s = it->second->status;
        if (s != CandidateStatus::Selected && s != CandidateStatus::ManuallyRejected) {
            throw Error(ErrorCode::kInvalidArgument, "candidate '" + id + "' is " + status_name(s) + ", not selected");
        }
    }
    std::size_t changed = 0;
    for (const auto& [id, reason] : decisions) {
        CandidateQuestion& c = *by_id.at(id);
        if (c.status == CandidateStatus::ManuallyRejected) continue;
        c.status = CandidateStatus::ManuallyRejected;
        c.reason = "manual_review: " + (reason.empty() ? std::string("rejected") : reason);
        ++changed;
    }
    return changed;
}

FunnelReport run_funnel(const std::vector<ScriptInput>& scripts, GenerationClient& question_client,
                        GenerationClient& program_client, const ComplexityModel& model, const SubtreeCatalog& catalog,
                        const FunnelOptions& options, const std::string& store_path) {
    if (model.catalog_fingerprint != catalog.fingerprint()) {
        throw Error(ErrorCode::kCatalogMismatch, "model was trained against catalog " + model.catalog_fingerprint +
                                                     ", got " + catalog.fingerprint());
    }
    const std::string canonicalization = canonicalization_digest(options.parse);
    {
        std::set<std::string> seen;
        for (const auto& s : scripts) {
            if (!seen.insert(s.video_id).second) throw Error(ErrorCode::kInvalidArgument, "duplicate video id '" + s.video_id + "'");
        }
    }

    std::map<std::string, std::vector<CandidateQuestion>> previous;  // by video
    if (!store_path.empty() && std::filesystem::exists(store_path)) {
        for (auto& c : read_store(store_path)) previous[c.video_id].push_back(std::move(c));
    }

    FunnelReport report;
    std::vector<CandidateQuestion> store;
    const std::string qclient = question_client.id();
    const std::string pclient = program_client.id();
    for (const auto& input : scripts) {
        const std::string script_hash = hex_digest(input.script);
        const std::string prompt = question_prompt(input.script, options.questions_per_script);
        const std::string prompt_hash = hex_digest(prompt);

        std::vector<CandidateQuestion> batch;
        if (auto it = previous.find(input.video_id); it != previous.end()) {
            for (auto& c : it->second) {
                if (c.provenance.script_hash == script_hash && c.provenance.question_prompt_hash == prompt_hash &&
                    c.provenance.question_client == qclient) {
                    batch.push_back(c);
                }
            }
            std::sort(batch.begin(), batch.end(),
                      [](const auto& a, const auto& b) { return a.ordinal < b.ordinal; });
            report.reused += batch.size();
        }
        if (batch.empty()) {
            std::vector<GeneratedQuestion> generated;
            try {
                generated = question_client.generate_questions(input.script, prompt);
            } catch (const Error& e) {
                report.video_errors.push_back(input.video_id + ": " + e.what());
                continue;
            }
            if (generated.empty()) {
                report.video_errors.push_back(input.video_id + ": client returned no questions");
                continue;
            }
            for (std::size_t i = 0; i < generated.size(); ++i) {
                const auto& g = generated[i];
                CandidateQuestion c;
                c.video_id = input.video_id;
                c.ordinal = i;
                c.question = g.question;
                c.candidate_id = hex_digest(input.video_id + '\x1f' + script_hash + '\x1f' + std::to_string(i) + '\x1f' +
                                            g.question);
                c.correct_index = static_cast<int>(fnv1a64(c.candidate_id) % 5);
                std::size_t d = 0;
                for (int k = 0; k < 5; ++k) c.options[k] = (k == c.correct_index) ? g.answer : g.distractors[d++];
                c.provenance.question_client = qclient;
                c.provenance.script_hash = script_hash;
                c.provenance.question_prompt_hash = prompt_hash;
                batch.push_back(std::move(c));
            }
        }

        for (auto& c : batch) {
            const bool rejected = c.status == CandidateStatus::ManuallyRejected;
            const std::string review_reason = c.reason;
            const std::vector<std::string> opts(c.options.begin(), c.options.end());
            const std::string pprompt = program_prompt(c.question, opts);
            if (needs_program(c, pclient) || c.provenance.program_prompt_hash != hex_digest(pprompt)) {
                c.provenance.program_client = pclient;
                c.provenance.program_prompt_hash = hex_digest(pprompt);
                ++report.generated;
                try {
                    c.program = program_client.generate_program(c.question, opts, pprompt);
                    c.provenance.program_hash = hex_digest(c.program);
                } catch (const Error& e) {
                    c.program.clear();
                    c.provenance.program_hash.clear();
                    c.score.reset();
                    c.status = CandidateStatus::FilteredOut;
                    c.reason = std::string("client_error: ") + e.what();
                    continue;
                }
            }
            score_candidate(c, model, catalog, options.parse, canonicalization);
            if (rejected) {
                c.status = CandidateStatus::ManuallyRejected;
                c.reason = review_reason;
            }
        }
        for (auto& c : batch) store.push_back(std::move(c));
    }

    FunnelReport selection = apply_selection(store, options.rule);
    if (!store_path.empty()) write_store(store_path, store);
    selection.videos = scripts.size();
    selection.reused = report.reused;
    selection.generated = report.generated;
    selection.video_errors = std::move(report.video_errors);
    return selection;
}

}  // namespace codeplex
