#pragma once

#include <string>
#include <string_view>

namespace nlikit {

inline constexpr const char* kToolkitVersion = "0.1.0";

// The four supported classification tasks.
enum class Task { stance, topic, hate_speech, event };

// Binary entailment label. The numeric encoding is part of the wire
// format and of the annotator prompt convention: 0 = entail, 1 = not entail.
enum class Label : int { entail = 0, not_entail = 1 };

enum class Provenance { original, negative_sample };

enum class ValidationStatus { unvalidated, agreed, disagreed, removed };

// Per-example split assignment. Group-level assignments use GroupSplit.
enum class Split { unassigned, train, validation_seen, validation_unseen, test };

std::string to_string(Task t);
std::string to_string(Label l);
std::string to_string(Provenance p);
std::string to_string(ValidationStatus v);
std::string to_string(Split s);

// All parsers throw SchemaError on unknown values.
Task parse_task(std::string_view s);
Label parse_label_name(std::string_view s);
Label parse_label_value(int v);
Provenance parse_provenance(std::string_view s);
ValidationStatus parse_validation_status(std::string_view s);
Split parse_split(std::string_view s);

} // namespace nlikit
