#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "educhain/ledger/canonical.hpp"
#include "educhain/ledger/digest.hpp"
#include "educhain/state/final_state_db.hpp"

namespace educhain::state {

struct TranscriptRow {
    std::string courseId;
    std::string title;
    std::string term;
    std::uint32_t score = 0;
    std::string letter;

    friend bool operator==(const TranscriptRow&, const TranscriptRow&) = default;
};

struct TranscriptDoc {
    std::string studentId;
    std::string studentName;
    std::vector<TranscriptRow> rows;  // sorted by (term, courseId)
    std::uint64_t issuedAt = 0;
    ledger::Hash256 digest;           // sha256 of content_fields().encode()

    ledger::FieldMap content_fields() const;
    ledger::Hash256 compute_digest() const { return ledger::digest_sha256(content_fields().encode()); }
    bool digest_valid() const { return compute_digest() == digest; }
    // Content fields plus the digest.
    Bytes encode() const;
    static TranscriptDoc decode(ByteView data);

    friend bool operator==(const TranscriptDoc&, const TranscriptDoc&) = default;
};

// Builds a transcript for exactly the selected courses and logs the export.
// Throws UnknownStudent, or MissingGrade naming the first course without a
// grade row for the student.
TranscriptDoc export_transcript(FinalStateDb& db, const std::string& studentId, const std::set<std::string>& courseIds,
                                std::uint64_t issuedAt, const ledger::AccountId& actor);

// Same document without the log entry, for callers that only read.
TranscriptDoc build_transcript(const FinalStateDb& db, const std::string& studentId,
                               const std::set<std::string>& courseIds, std::uint64_t issuedAt);

}  // namespace educhain::state
