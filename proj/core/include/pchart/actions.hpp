#pragma once

// Editor actions and the pure reducer that applies them to a chart.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pchart/chart.hpp"

namespace pchart {

namespace act {
struct AddState {
  StateId parent = 0;
  StateKind kind = StateKind::Basic;
  Rect box;
  std::optional<std::string> name;  // defaults to S<id>
};
struct RenameState {
  StateId id = 0;
  std::string name;
};
struct MoveState {
  StateId id = 0;
  Rect box;  // descendants follow a pure translation
};
struct DeleteState {
  StateId id = 0;
};
struct AddTransition {
  StateId source = 0;
  std::string label;
  nlohmann::json body;  // document format; node ids of 0 are allocated
};
struct EditLabel {
  TransId id = 0;
  std::string label;
};
struct MoveLabelManual {
  std::string connection;
  std::optional<Rect> rect;  // none returns the label to automatic placement
};
struct SetInvariant {
  StateId id = 0;
  std::string text;  // empty clears
};
struct SetVariable {
  StateId state = 0;
  std::string decl;  // `name : lo..hi = e`; replaces a variable of the same name
  std::optional<std::string> comment;
};
struct RemoveVariable {
  StateId state = 0;
  std::string name;
};
struct AddQuery {
  QueryKind kind = QueryKind::Pmax;
  StateId target = 0;
  StateId attached_to = 0;
};
struct DeleteQuery {
  std::int64_t id = 0;
};
struct DeleteTransition {
  TransId id = 0;
};
}  // namespace act

using EditorAction = std::variant<act::AddState, act::RenameState, act::MoveState, act::DeleteState, act::AddTransition,
                                  act::EditLabel, act::MoveLabelManual, act::SetInvariant, act::SetVariable,
                                  act::RemoveVariable, act::AddQuery, act::DeleteQuery, act::DeleteTransition>;

// `{"type": "AddState", ...}`; throws SchemaViolation.
EditorAction action_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EditorAction& a);

struct ActionResult {
  Chart chart;  // the input chart when rejected
  std::vector<Diagnostic> diagnostics;
  bool applied = false;
};

ActionResult apply_action(const Chart& chart, const EditorAction& a);
// All or nothing; stops at the first rejected action and reports its index.
struct BatchResult {
  Chart chart;
  std::vector<Diagnostic> diagnostics;
  std::optional<std::size_t> failed;
};
BatchResult apply_actions(const Chart& chart, const std::vector<EditorAction>& actions);

}  // namespace pchart
