#include <gtest/gtest.h>

#include <random>
#include <set>

#include "educhain/error.hpp"
#include "educhain/state/checksum.hpp"
#include "educhain/state/content_store.hpp"
#include "educhain/state/final_state_db.hpp"
#include "educhain/state/transcript.hpp"
#include "test_support.hpp"

using namespace educhain;
using namespace educhain::state;
using ledger::AccountId;
using ledger::Hash256;
namespace tu = educhain::testutil;

namespace {

AccountId actor() { return tu::key_for("registrar").account(); }

chain::ChainEvent event(ledger::RecordOp op, std::uint64_t height = 1) {
    chain::ChainEvent ev;
    ev.blockHeight = height;
    ev.txHash = ledger::digest_sha256(ledger::encode_op(op));
    ev.op = std::move(op);
    ev.actor = actor();
    ev.timestamp = 1000 + height;
    return ev;
}

ledger::RegisterAccount staff(const std::string& id) {
    return {tu::key_for(id).public_key(), ledger::Role::Staff, id, "Dr " + id};
}

// Small populated database: 1 staff, 2 courses, `students` students each
// graded in both courses.
FinalStateDb seeded(int students) {
    FinalStateDb db;
    db.apply_event(event(staff("T1")));
    db.apply_event(event(ledger::RegisterCourse{"C1", "Algebra", "2023-Fall", "T1"}));
    db.apply_event(event(ledger::RegisterCourse{"C2", "Biology", "2023-Spring", "T1"}));
    for (int i = 0; i < students; ++i) {
        auto sid = "S" + std::to_string(1000 + i);
        db.apply_event(event(ledger::RegisterStudent{sid, "Name " + sid, "CS"}));
        db.apply_event(event(ledger::UpsertGrade{sid, "C1", "2023-Fall", static_cast<std::uint32_t>(50 + i % 50), "B"}));
        db.apply_event(event(ledger::UpsertGrade{sid, "C2", "2023-Spring", static_cast<std::uint32_t>(i % 101), "C"}));
    }
    return db;
}

}  // namespace

TEST(Schema, RowKeyParseAndOrder) {
    auto k = RowKey::parse("S1/C1/2023-Fall");
    EXPECT_EQ(k.parts().size(), 3u);
    EXPECT_EQ(k.str(), "S1/C1/2023-Fall");
    EXPECT_LT((RowKey{"S1", "C1"}), (RowKey{"S1", "C1", "a"}));
    EXPECT_EQ(table_from_name("grades"), TableId::Grades);
    EXPECT_THROW(table_from_name("payroll"), Error);
}

TEST(Schema, RowEncodingRoundTrip) {
    Row row{{"score", "91"}, {"letter", "A"}, {"attachmentCid", ""}};
    RowKey key{"S1", "C1", "2023-Fall"};
    auto enc = encode_row(TableId::Grades, key, row);
    auto [k2, r2] = decode_row(TableId::Grades, enc);
    EXPECT_EQ(k2, key);
    EXPECT_EQ(r2, row);
}

TEST(FinalState, UpsertGradeForKnownStudent) {
    auto db = seeded(1);
    auto before = db.op_log().size();
    auto r = db.apply_event(event(ledger::UpsertGrade{"S1000", "C1", "2023-Fall", 91, "A"}));
    EXPECT_TRUE(r.ok);
    EXPECT_EQ(r.rowsChanged, 1u);
    EXPECT_EQ(db.op_log().size(), before + 1);
    EXPECT_EQ(db.find(TableId::Grades, {"S1000", "C1", "2023-Fall"})->at("score"), "91");
}

TEST(FinalState, UnknownStudentLoggedWithoutMutation) {
    auto db = seeded(1);
    auto digest = table_digest(db, TableId::Grades);
    auto r = db.apply_event(event(ledger::UpsertGrade{"S9", "C1", "2023-Fall", 91, "A"}));
    EXPECT_FALSE(r.ok);
    EXPECT_EQ(table_digest(db, TableId::Grades), digest);
    EXPECT_EQ(db.op_log().back().status.rfind("failed: SchemaViolation", 0), 0u);
    EXPECT_EQ(db.op_log().back().opKind, "UpsertGrade");
}

TEST(FinalState, DoubleReplayDigestsEqual) {
    auto a = seeded(20);
    auto b = seeded(20);
    for (auto t : kAllTables) EXPECT_EQ(table_digest(a, t), table_digest(b, t));
    EXPECT_TRUE(a.same_tables(b));
}

TEST(FinalState, OpLogSeqDense) {
    auto db = seeded(5);
    for (std::size_t i = 0; i < db.op_log().size(); ++i) EXPECT_EQ(db.op_log()[i].seq, i);
}

TEST(FinalState, StaffCourseListFollowsOwnership) {
    auto db = seeded(0);
    EXPECT_EQ(db.find(TableId::Staff, {"T1"})->at("courses"), "C1,C2");
    db.apply_event(event(staff("T2")));
    db.apply_event(event(ledger::RegisterCourse{"C1", "Algebra", "2023-Fall", "T2"}));
    EXPECT_EQ(db.find(TableId::Staff, {"T1"})->at("courses"), "C2");
    EXPECT_EQ(db.find(TableId::Staff, {"T2"})->at("courses"), "C1");
}

TEST(FinalState, AttachFileLinksGradeRows) {
    auto db = seeded(1);
    auto cid = ledger::digest_sha256("scan");
    auto r = db.apply_event(event(ledger::AttachFile{"S1000", "C1", cid, 4, "image/png"}));
    ASSERT_TRUE(r.ok);
    EXPECT_EQ(db.find(TableId::Grades, {"S1000", "C1", "2023-Fall"})->at("attachmentCid"), cid.hex());
    EXPECT_EQ(db.find(TableId::Attachments, {cid.hex()})->at("size"), "4");
    EXPECT_FALSE(db.apply_event(event(ledger::AttachFile{"S1000", "C9", cid, 4, "x"})).ok);
}

TEST(FinalState, AuditRepairIsConditional) {
    auto db = seeded(1);
    RowKey key{"S1000", "C1", "2023-Fall"};
    auto good = *db.find(TableId::Grades, key);
    db.write_direct(TableId::Grades, key, "score", "7");
    auto bad = *db.find(TableId::Grades, key);

    ledger::AuditRepair fix{"grades", key.str(), "*", to_hex(encode_row(TableId::Grades, key, bad)),
                            to_hex(encode_row(TableId::Grades, key, good)), "r1"};
    EXPECT_EQ(db.apply_event(event(fix)).rowsChanged, 1u);
    EXPECT_EQ(*db.find(TableId::Grades, key), good);
    // Replaying the same record on a healthy replica changes nothing.
    EXPECT_EQ(db.apply_event(event(fix)).rowsChanged, 0u);
    EXPECT_EQ(*db.find(TableId::Grades, key), good);
}

TEST(Query, PredicatesAndErrors) {
    auto db = seeded(3);
    auto rows = query(db, "grades", {{"studentId", "S1001"}});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].at("courseId"), "C1");
    EXPECT_EQ(rows[1].at("courseId"), "C2");
    EXPECT_EQ(query(db, "grades", {}).size(), 6u);
    EXPECT_TRUE(query(db, "grades", {{"studentId", "nobody"}}).empty());
    try {
        query(db, "payroll", {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownTable);
    }
    try {
        query(db, "grades", {{"salary", "1"}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownField);
    }
}

TEST(Checksum, EmptyTableIsMd5OfEmpty) {
    FinalStateDb db;
    EXPECT_EQ(table_digest(db, TableId::Grades).hex(), "d41d8cd98f00b204e9800998ecf8427e");
    EXPECT_THROW(table_digest(db, "nope"), Error);
}

// Golden computed by an independent encoder (Python struct/hashlib).
TEST(Checksum, KnownTableDigest) {
    FinalStateDb db;
    db.apply_event(event(ledger::RegisterStudent{"S1", "Ann", "CS"}));
    db.apply_event(event(ledger::RegisterStudent{"S2", "Bo", "EE"}));
    EXPECT_EQ(to_hex(encode_row(TableId::Students, {"S1"}, *db.find(TableId::Students, {"S1"}))),
              "0000000761646472657373000000000000000d646567726565417761726465640000000000000005656d61696c0000"
              "0000000000046e616d6500000003416e6e0000000770726f6772616d0000000243530000000973747564656e744964"
              "0000000253310000000974656c6570686f6e6500000000");
    EXPECT_EQ(table_digest(db, TableId::Students).hex(), "1b9a150d78f9ec18316b192a67894243");
}

TEST(Checksum, ChunkArithmetic) {
    auto db = seeded(65);  // 130 grade rows
    auto chunks = chunk_checksums(db, TableId::Grades, 64);
    ASSERT_EQ(chunks.size(), 3u);
    EXPECT_EQ(chunks[0].rowCount, 64u);
    EXPECT_EQ(chunks[1].rowCount, 64u);
    EXPECT_EQ(chunks[2].rowCount, 2u);
    EXPECT_LT(chunks[0].lastKey, chunks[1].firstKey);
    EXPECT_THROW(chunk_checksums(db, TableId::Grades, 0), Error);

    auto whole = chunk_checksums(db, TableId::Grades, 1000);
    ASSERT_EQ(whole.size(), 1u);
    EXPECT_EQ(whole[0].digest, table_digest(db, TableId::Grades));
    EXPECT_EQ(whole[0].rowCount, 130u);
}

TEST(Checksum, SingleTamperChangesExactlyOneChunk) {
    std::mt19937_64 rng(11);
    auto base = seeded(100);
    auto keys = keys_in_range(base, TableId::Grades, {});
    auto clean = chunk_checksums(base, TableId::Grades, 64);
    for (int trial = 0; trial < 40; ++trial) {
        auto db = base;
        const auto& key = keys[rng() % keys.size()];
        auto score = db.find(TableId::Grades, key)->at("score");
        db.write_direct(TableId::Grades, key, "score", score == "100" ? "99" : std::to_string(std::stoi(score) + 1));
        auto tampered = chunk_checksums(db, TableId::Grades, 64);
        int differing = 0;
        for (std::size_t i = 0; i < clean.size(); ++i) differing += clean[i].digest != tampered[i].digest;
        EXPECT_EQ(differing, 1);
        EXPECT_NE(table_digest(db, TableId::Grades), table_digest(base, TableId::Grades));
    }
}

TEST(Checksum, RangesAreHalfOpen) {
    auto db = seeded(10);
    KeyRange r{RowKey{"S1002"}, RowKey{"S1004"}};
    EXPECT_EQ(range_checksum(db, TableId::Grades, r).rowCount, 4u);
    EXPECT_EQ(range_checksum(db, TableId::Grades, {}).digest, table_digest(db, TableId::Grades));
    EXPECT_EQ(range_checksum(db, TableId::Grades, {RowKey{"S1004"}, RowKey{"S1002"}}).rowCount, 0u);
}

TEST(ContentStore, RoundTripIdempotentAbsent) {
    ContentStore store;
    std::mt19937_64 rng(3);
    auto blob = tu::random_blob(rng, 1024);
    auto cid = store.put(blob);
    EXPECT_EQ(cid, ledger::digest_sha256(blob));
    EXPECT_EQ(store.at(cid), blob);
    EXPECT_EQ(store.put(blob), cid);
    EXPECT_EQ(store.size(), 1u);
    EXPECT_FALSE(store.get(ledger::digest_sha256("other")).has_value());
    EXPECT_THROW(store.at(ledger::digest_sha256("other")), Error);
}

TEST(Transcript, ExportSelectedCourses) {
    auto db = seeded(2);
    db.apply_event(event(ledger::RegisterCourse{"C3", "Chemistry", "2022-Fall", "T1"}));
    db.apply_event(event(ledger::UpsertGrade{"S1000", "C3", "2022-Fall", 77, "B"}));
    auto before = db.op_log().size();
    auto doc = export_transcript(db, "S1000", {"C1", "C2", "C3"}, 5000, actor());
    ASSERT_EQ(doc.rows.size(), 3u);
    EXPECT_EQ(doc.rows[0].term, "2022-Fall");
    EXPECT_EQ(doc.rows[1].term, "2023-Fall");
    EXPECT_EQ(doc.rows[2].term, "2023-Spring");
    EXPECT_TRUE(doc.digest_valid());
    EXPECT_EQ(db.op_log().size(), before + 1);
    EXPECT_EQ(db.op_log().back().opKind, "ExportTranscript");

    auto again = export_transcript(db, "S1000", {"C1", "C2", "C3"}, 5000, actor());
    EXPECT_EQ(doc.encode(), again.encode());
    EXPECT_EQ(TranscriptDoc::decode(doc.encode()), doc);
}

TEST(Transcript, Errors) {
    auto db = seeded(1);
    try {
        export_transcript(db, "S1000", {"C1", "C7"}, 1, actor());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::MissingGrade);
    }
    try {
        export_transcript(db, "S404", {"C1"}, 1, actor());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownStudent);
    }
}

TEST(Snapshot, RoundTripAndDeterminism) {
    auto db = seeded(10);
    auto snap = save_snapshot(db);
    EXPECT_EQ(snap, save_snapshot(seeded(10)));
    auto loaded = load_snapshot(snap);
    EXPECT_TRUE(loaded.same_tables(db));
    EXPECT_EQ(loaded.op_log(), db.op_log());
    Bytes bad = snap;
    bad[0] ^= 1;
    EXPECT_THROW(load_snapshot(bad), Error);
}
