#include "nlikit/types.hpp"

#include "nlikit/errors.hpp"

namespace nlikit {

std::string to_string(Task t) {
    switch (t) {
    case Task::stance: return "stance";
    case Task::topic: return "topic";
    case Task::hate_speech: return "hate_speech";
    case Task::event: return "event";
    }
    throw SchemaError("invalid Task value");
}

std::string to_string(Label l) {
    switch (l) {
    case Label::entail: return "entail";
    case Label::not_entail: return "not_entail";
    }
    throw SchemaError("invalid Label value");
}

std::string to_string(Provenance p) {
    switch (p) {
    case Provenance::original: return "original";
    case Provenance::negative_sample: return "negative_sample";
    }
    throw SchemaError("invalid Provenance value");
}

std::string to_string(ValidationStatus v) {
    switch (v) {
    case ValidationStatus::unvalidated: return "unvalidated";
    case ValidationStatus::agreed: return "agreed";
    case ValidationStatus::disagreed: return "disagreed";
    case ValidationStatus::removed: return "removed";
    }
    throw SchemaError("invalid ValidationStatus value");
}

std::string to_string(Split s) {
    switch (s) {
    case Split::unassigned: return "unassigned";
    case Split::train: return "train";
    case Split::validation_seen: return "validation_seen";
    case Split::validation_unseen: return "validation_unseen";
    case Split::test: return "test";
    }
    throw SchemaError("invalid Split value");
}

Task parse_task(std::string_view s) {
    if (s == "stance") return Task::stance;
    if (s == "topic") return Task::topic;
    if (s == "hate_speech") return Task::hate_speech;
    if (s == "event") return Task::event;
    throw SchemaError("unknown task value: '" + std::string(s) + "'");
}

Label parse_label_name(std::string_view s) {
    if (s == "entail") return Label::entail;
    if (s == "not_entail") return Label::not_entail;
    throw SchemaError("unknown label name: '" + std::string(s) + "'");
}

Label parse_label_value(int v) {
    if (v == 0) return Label::entail;
    if (v == 1) return Label::not_entail;
    throw SchemaError("label value out of domain {0,1}: " + std::to_string(v));
}

Provenance parse_provenance(std::string_view s) {
    if (s == "original") return Provenance::original;
    if (s == "negative_sample") return Provenance::negative_sample;
    throw SchemaError("unknown provenance value: '" + std::string(s) + "'");
}

ValidationStatus parse_validation_status(std::string_view s) {
    if (s == "unvalidated") return ValidationStatus::unvalidated;
    if (s == "agreed") return ValidationStatus::agreed;
    if (s == "disagreed") return ValidationStatus::disagreed;
    if (s == "removed") return ValidationStatus::removed;
    throw SchemaError("unknown validation_status value: '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
    if (s == "unassigned") return Split::unassigned;
    if (s == "train") return Split::train;
    if (s == "validation_seen") return Split::validation_seen;
    if (s == "validation_unseen") return Split::validation_unseen;
    if (s == "test") return Split::test;
    throw SchemaError("unknown split value: '" + std::string(s) + "'");
}

} // namespace nlikit
