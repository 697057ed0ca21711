#pragma once

// Neutral scene-graph schema and its rendering into a textual video script.
//
// Scene graph (JSON, one object per video):
//   {
//     "video_id": "v1",
//     "activity": {"title": "Dining", "span": [0, 597]},
//     "actors": [{"id": "A", "class": "person", "description": "..."}],
//     "sub_activities": [{
//         "span": [0, 10],
//         "description": "...",
//         "actor_ids": ["A", {"id": "B", "class": "table"}],
//         "events": [{"type": "attribute", "actor": "A", "text": "sitting"},
//                    {"type": "transitive", "actor": "A", "text": "looks at", "target": "B"},
//                    {"type": "intransitive", "actor": "A", "text": "talks"}],
//         "relation_changes": [{"subject": "A", "object": "B", "from": "far from", "to": "next to"}]
//     }]
//   }

#include <optional>
#include <string>
#include <vector>

namespace codeplex {

struct Span {
    double start = 0.0;
    double end = 0.0;
};

struct SceneActor {
    std::string id;
    std::string cls;
    std::string description;
};

enum class EventType { Attribute, Transitive, Intransitive };

struct SceneEvent {
    EventType type = EventType::Attribute;
    std::string actor;
    std::string text;
    std::string target;  // transitive only
};

struct RelationChange {
    std::string subject;
    std::string object;
    std::string from;  // may be empty: relation appeared
    std::string to;    // may be empty: relation ended
};

struct SubActivity {
    Span span;
    std::string description;
    std::vector<std::string> actor_ids;
    std::vector<SceneEvent> events;
    std::vector<RelationChange> relation_changes;
};

struct SceneGraph {
    std::string video_id;
    std::string title;
    Span span;
    std::vector<SceneActor> actors;
    std::vector<SubActivity> sub_activities;
};

/// Validates and converts the JSON text. Throws Error(SchemaError) with a
/// JSON-pointer style path, or Error(InconsistentActorId) when one actor id
/// is bound to two different classes.
SceneGraph parse_scene_graph(const std::string& json_text);

/// Script text: activity header, actor list, then one section per sub-activity.
std::string render_script(const SceneGraph& graph);

}  // namespace codeplex
