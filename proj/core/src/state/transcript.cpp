#include "educhain/state/transcript.hpp"

#include <algorithm>
#include <tuple>

#include "educhain/error.hpp"
#include "educhain/ledger/snapshot.hpp"

namespace educhain::state {

using ledger::FieldMap;
using ledger::FieldReader;

FieldMap TranscriptDoc::content_fields() const {
    FieldMap rowsMap;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        FieldMap m;
        m.set_string("courseId", r.courseId)
            .set_string("title", r.title)
            .set_string("term", r.term)
            .set_uint("score", r.score)
            .set_string("letter", r.letter);
        rowsMap.set_map(ledger::index_key(i), m);
    }
    FieldMap f;
    f.set_string("studentId", studentId)
        .set_string("studentName", studentName)
        .set_map("rows", rowsMap)
        .set_uint("issuedAt", issuedAt);
    return f;
}

Bytes TranscriptDoc::encode() const {
    auto f = content_fields();
    f.set_hex("digest", digest.view());
    return f.encode();
}

TranscriptDoc TranscriptDoc::decode(ByteView data) {
    auto r = FieldReader::decode(data);
    TranscriptDoc doc;
    doc.studentId = r.string("studentId");
    doc.studentName = r.string("studentName");
    doc.issuedAt = r.uint("issuedAt");
    doc.digest = ledger::Hash256::from_bytes(r.hex("digest"));
    auto rows = r.nested("rows");
    for (const auto& [idx, enc] : rows.fields()) {
        auto row = FieldReader::decode(enc);
        doc.rows.push_back({row.string("courseId"), row.string("title"), row.string("term"),
                            static_cast<std::uint32_t>(row.uint("score")), row.string("letter")});
    }
    return doc;
}

TranscriptDoc build_transcript(const FinalStateDb& db, const std::string& studentId,
                               const std::set<std::string>& courseIds, std::uint64_t issuedAt) {
    auto student = db.find(TableId::Students, RowKey{studentId});
    if (!student) throw Error(Errc::UnknownStudent, studentId);

    TranscriptDoc doc;
    doc.studentId = studentId;
    doc.studentName = student->at("name");
    doc.issuedAt = issuedAt;

    const auto& grades = db.table(TableId::Grades);
    for (const auto& courseId : courseIds) {
        auto course = db.find(TableId::Courses, RowKey{courseId});
        bool found = false;
        for (auto it = grades.lower_bound(RowKey{studentId, courseId}); it != grades.end(); ++it) {
            const auto& p = it->first.parts();
            if (p[0] != studentId || p[1] != courseId) break;
            found = true;
            doc.rows.push_back({courseId, course ? course->at("title") : "", p[2],
                                static_cast<std::uint32_t>(std::stoul(it->second.at("score"))),
                                it->second.at("letter")});
        }
        if (!found) throw Error(Errc::MissingGrade, courseId);
    }
    std::sort(doc.rows.begin(), doc.rows.end(), [](const auto& a, const auto& b) {
        return std::tie(a.term, a.courseId) < std::tie(b.term, b.courseId);
    });
    doc.digest = doc.compute_digest();
    return doc;
}

TranscriptDoc export_transcript(FinalStateDb& db, const std::string& studentId, const std::set<std::string>& courseIds,
                                std::uint64_t issuedAt, const ledger::AccountId& actor) {
    auto doc = build_transcript(db, studentId, courseIds, issuedAt);
    db.append_log(actor, "ExportTranscript", issuedAt, 0);
    return doc;
}

}  // namespace educhain::state
