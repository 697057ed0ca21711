#include "codeplex/scene_script.hpp"

#include "codeplex/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace codeplex {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::kSchemaError, path + ": " + what);
}

const json& field(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(path + "/" + key, "missing");
    return *it;
}

std::string string_field(const json& obj, const std::string& path, const char* key, bool required = true) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) schema_error(path + "/" + key, "missing");
        return {};
    }
    if (!it->is_string()) schema_error(path + "/" + key, "expected a string");
    return it->get<std::string>();
}

const json& array_field(const json& obj, const std::string& path, const char* key, bool required) {
    static const json empty = json::array();
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) schema_error(path + "/" + key, "missing");
        return empty;
    }
    if (!it->is_array()) schema_error(path + "/" + key, "expected an array");
    return *it;
}

Span parse_span(const json& value, const std::string& path) {
    if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number()) {
        schema_error(path, "expected [start, end] in seconds");
    }
    Span s{value[0].get<double>(), value[1].get<double>()};
    if (!std::isfinite(s.start) || !std::isfinite(s.end)) schema_error(path, "non-finite time");
    if (s.start < 0.0) schema_error(path + "/0", "negative time");
    if (s.end < s.start) schema_error(path, "end precedes start");
    return s;
}

std::string fmt_time(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", t);
    return buf;
}

}  // namespace

SceneGraph parse_scene_graph(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::kSchemaError, std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) schema_error("", "expected an object");

    SceneGraph g;
    g.video_id = string_field(doc, "", "video_id");
    if (g.video_id.empty()) schema_error("/video_id", "empty");
    const json& activity = field(doc, "", "activity");
    if (!activity.is_object()) schema_error("/activity", "expected an object");
    g.title = string_field(activity, "/activity", "title");
    g.span = parse_span(field(activity, "/activity", "span"), "/activity/span");

    std::map<std::string, std::string> classes;
    const json& actors = array_field(doc, "", "actors", true);
    for (std::size_t i = 0; i < actors.size(); ++i) {
        const std::string path = "/actors/" + std::to_string(i);
        if (!actors[i].is_object()) schema_error(path, "expected an object");
        SceneActor a;
        a.id = string_field(actors[i], path, "id");
        a.cls = string_field(actors[i], path, "class");
        a.description = string_field(actors[i], path, "description", false);
        if (a.id.empty()) schema_error(path + "/id", "empty");
        auto [it, fresh] = classes.emplace(a.id, a.cls);
        if (!fresh) {
            if (it->second != a.cls) {
                throw Error(ErrorCode::kInconsistentActorId, "actor '" + a.id + "' is declared as both '" + it->second +
                                                                 "' and '" + a.cls + "' (" + path + ")");
            }
            continue;  // exact duplicate
        }
        g.actors.push_back(std::move(a));
    }

    auto resolve = [&](const std::string& id, const std::string& path) {
        if (classes.count(id) == 0) schema_error(path, "unknown actor id '" + id + "'");
    };

    const json& subs = array_field(doc, "", "sub_activities", true);
    for (std::size_t i = 0; i < subs.size(); ++i) {
        const std::string path = "/sub_activities/" + std::to_string(i);
        const json& sj = subs[i];
        if (!sj.is_object()) schema_error(path, "expected an object");
        SubActivity sub;
        sub.span = parse_span(field(sj, path, "span"), path + "/span");
        if (sub.span.start < g.span.start || sub.span.end > g.span.end) {
            schema_error(path + "/span", "outside the activity span");
        }
        sub.description = string_field(sj, path, "description", false);

        // actor ids may be bare strings or {id, class} pairs; a class that
        // disagrees with the actor list, or with an earlier entry here, is a collision
        std::map<std::string, std::string> local;
        const json& ids = array_field(sj, path, "actor_ids", false);
        for (std::size_t j = 0; j < ids.size(); ++j) {
            const std::string p = path + "/actor_ids/" + std::to_string(j);
            std::string id;
            std::string cls;
            if (ids[j].is_string()) {
                id = ids[j].get<std::string>();
            } else if (ids[j].is_object()) {
                id = string_field(ids[j], p, "id");
                cls = string_field(ids[j], p, "class", false);
            } else {
                schema_error(p, "expected an id string or {id, class}");
            }
            resolve(id, p);
            const std::string& declared = classes.at(id);
            if (!cls.empty() && cls != declared) {
                throw Error(ErrorCode::kInconsistentActorId, "actor '" + id + "' is '" + declared + "' but '" + cls +
                                                                 "' in " + p);
            }
            if (!local.emplace(id, declared).second) continue;
            sub.actor_ids.push_back(id);
        }

        const json& events = array_field(sj, path, "events", false);
        for (std::size_t j = 0; j < events.size(); ++j) {
            const std::string p = path + "/events/" + std::to_string(j);
            if (!events[j].is_object()) schema_error(p, "expected an object");
            SceneEvent e;
            const std::string type = string_field(events[j], p, "type");
            if (type == "attribute") {
                e.type = EventType::Attribute;
            } else if (type == "transitive") {
                e.type = EventType::Transitive;
            } else if (type == "intransitive") {
                e.type = EventType::Intransitive;
            } else {
                schema_error(p + "/type", "expected attribute, transitive or intransitive");
            }
            e.actor = string_field(events[j], p, "actor");
            resolve(e.actor, p + "/actor");
            e.text = string_field(events[j], p, "text");
            if (e.type == EventType::Transitive) {
                e.target = string_field(events[j], p, "target");
                resolve(e.target, p + "/target");
            }
            sub.events.push_back(std::move(e));
        }

        const json& rels = array_field(sj, path, "relation_changes", false);
        for (std::size_t j = 0; j < rels.size(); ++j) {
            const std::string p = path + "/relation_changes/" + std::to_string(j);
            if (!rels[j].is_object()) schema_error(p, "expected an object");
            RelationChange r;
            r.subject = string_field(rels[j], p, "subject");
            r.object = string_field(rels[j], p, "object");
            resolve(r.subject, p + "/subject");
            resolve(r.object, p + "/object");
            r.from = string_field(rels[j], p, "from", false);
            r.to = string_field(rels[j], p, "to", false);
            if (r.from.empty() && r.to.empty()) schema_error(p, "neither from nor to is set");
            sub.relation_changes.push_back(std::move(r));
        }
        g.sub_activities.push_back(std::move(sub));
    }
    return g;
}

std::string render_script(const SceneGraph& g) {
    std::ostringstream out;
    out << "# Activity: \"" << g.title << "\" (" << fmt_time(g.span.start) << '-' << fmt_time(g.span.end) << ")\n";
    out << "All actors:\n";
    for (const auto& a : g.actors) {
        out << "- " << a.id << ": " << a.cls << '.';
        if (!a.description.empty()) out << " Visual description: " << a.description;
        out << '\n';
    }
    for (const auto& sub : g.sub_activities) {
        out << "\n## Sub activity (" << fmt_time(sub.span.start) << '-' << fmt_time(sub.span.end) << ")";
        if (!sub.description.empty()) out << ": " << sub.description;
        out << '\n';
        out << "- Actors present: ";
        for (std::size_t i = 0; i < sub.actor_ids.size(); ++i) out << (i ? ", " : "") << sub.actor_ids[i];
        out << '\n';
        if (!sub.events.empty()) {
            out << "- Happened during sub-activity:\n";
            for (const auto& e : sub.events) {
                switch (e.type) {
                    case EventType::Attribute:
                        out << "  - (attribute) " << e.actor << " is " << e.text << '\n';
                        break;
                    case EventType::Transitive:
                        out << "  - (transitive action) " << e.actor << ' ' << e.text << ' ' << e.target << '\n';
                        break;
                    case EventType::Intransitive:
                        out << "  - (intransitive action) " << e.actor << ' ' << e.text << '\n';
                        break;
                }
            }
        }
        if (!sub.relation_changes.empty()) {
            out << "- Relationship changes:\n";
            for (const auto& r : sub.relation_changes) {
                out << "  - " << r.subject << " and " << r.object << ": ";
                out << (r.from.empty() ? "(none)" : r.from) << " -> " << (r.to.empty() ? "(none)" : r.to) << '\n';
            }
        }
    }
    return out.str();
}

}  // namespace codeplex
