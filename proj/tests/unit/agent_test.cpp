#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

#include "podas/agent/agent.hpp"
#include "podas/roadsim.hpp"
#include "podas/server/ingest_service.hpp"
#include "test_support.hpp"

namespace podas::agent {
namespace {

using ::testing::_;
using ::testing::Field;
using ::testing::Return;
using testing::TempDir;

class MockTransport : public Transport {
 public:
  MOCK_METHOD(DeliveryResult, deliver, (const ReadingBatch& batch), (override));
};

// Forwards to the server but can drop the acknowledgment after commit.
class LossyTransport : public Transport {
 public:
  explicit LossyTransport(server::IngestService& s) : inner_(s) {}
  DeliveryResult deliver(const ReadingBatch& batch) override {
    seen.push_back(batch.batch_seq);
    auto r = inner_.deliver(batch);
    if (drop_next_ack && r.status == DeliveryResult::Status::Acked) {
      drop_next_ack = false;
      return DeliveryResult::failed("connection reset after commit");
    }
    return r;
  }
  bool drop_next_ack = false;
  std::vector<std::int64_t> seen;

 private:
  server::LocalTransport inner_;
};

std::vector<SensorReading> one_km_trace() {
  roadsim::ProfileParams params;
  const auto profile = roadsim::generate_profile(params);
  return roadsim::sample_trace(profile, {}, {}, "bus-01", 1'700'000'000'000, 43);
}

AgentConfig config(const std::filesystem::path& dir) {
  AgentConfig c;
  c.node_id = "bus-01";
  c.spool_dir = dir;
  c.fsync = false;
  return c;
}

server::ServerOptions server_opts(const std::filesystem::path& dir) {
  server::ServerOptions o;
  o.data_dir = dir;
  o.fsync = false;
  return o;
}

TEST(Agent, AlwaysDownSendsNothing) {
  TempDir dir;
  MockTransport transport;
  EXPECT_CALL(transport, deliver(_)).Times(0);
  SimulatedClock clock(0);
  Agent agent(config(dir / "spool"), transport, clock);
  for (const auto& r : one_km_trace()) agent.enqueue(r);
  const auto report = agent.flush(ConnectivitySchedule::always_down(), 50);
  EXPECT_EQ(report.batches, 0u);
  EXPECT_EQ(agent.queue().size(), 150u);
}

TEST(Agent, OpenWindowDrainsInBatchCapChunks) {
  TempDir dir;
  server::IngestService service(server_opts(dir / "server"));
  server::LocalTransport transport(service);
  SimulatedClock clock(0);
  Agent agent(config(dir / "spool"), transport, clock);
  for (const auto& r : one_km_trace()) agent.enqueue(r);
  const auto report = agent.flush(ConnectivitySchedule::always_on(), 50);
  EXPECT_EQ(report.batches, 3u);
  EXPECT_EQ(report.acked, 150u);
  EXPECT_TRUE(agent.queue().empty());
  EXPECT_EQ(service.reading_count(), 150u);
}

TEST(Agent, LostAckIsRetriedWithTheSameBatchSeqWithoutDuplicates) {
  TempDir dir;
  server::IngestService service(server_opts(dir / "server"));
  LossyTransport transport(service);
  transport.drop_next_ack = true;
  SimulatedClock clock(0);
  Agent agent(config(dir / "spool"), transport, clock);
  for (const auto& r : one_km_trace()) agent.enqueue(r);
  const auto report = agent.flush(ConnectivitySchedule::always_on(), 50);
  ASSERT_GE(transport.seen.size(), 2u);
  EXPECT_EQ(transport.seen[0], transport.seen[1]);
  EXPECT_EQ(report.retries, 1u);
  EXPECT_EQ(service.reading_count(), 150u);
  EXPECT_TRUE(agent.queue().empty());
}

TEST(Agent, TransportFailuresBackOffExponentially) {
  TempDir dir;
  MockTransport transport;
  const IngestResult ok{2, 0};
  EXPECT_CALL(transport, deliver(Field(&ReadingBatch::batch_seq, 0)))
      .WillOnce(Return(DeliveryResult::failed("down")))
      .WillOnce(Return(DeliveryResult::failed("down")))
      .WillOnce(Return(DeliveryResult::failed("down", 503)))
      .WillOnce(Return(DeliveryResult::acked(ok)));
  SimulatedClock clock(0);
  Agent agent(config(dir / "spool"), transport, clock);
  agent.enqueue({"bus-01", 0, 0, {1, 1}, 6, 950});
  agent.enqueue({"bus-01", 1, 0, {1, 1}, 6, 950});
  const auto report = agent.flush(ConnectivitySchedule::always_on(), 50);
  EXPECT_EQ(report.retries, 3u);
  EXPECT_EQ(report.acked, 2u);
  EXPECT_EQ(clock.now_ms(), 500 + 1000 + 2000);
}

TEST(Agent, BackoffIsCappedAtThirtySeconds) {
  TempDir dir;
  MockTransport transport;
  EXPECT_CALL(transport, deliver(_)).WillRepeatedly(Return(DeliveryResult::failed("down")));
  SimulatedClock clock(0);
  Agent agent(config(dir / "spool"), transport, clock);
  agent.enqueue({"bus-01", 0, 0, {1, 1}, 6, 950});
  const auto report = agent.flush(ConnectivitySchedule::always_on(), 50, 10 * 60'000);
  // 0.5 + 1 + 2 + 4 + 8 + 16 = 31.5 s, then 30 s steps up to the deadline.
  EXPECT_EQ(report.retries, 6u + 19u);
  EXPECT_EQ(agent.queue().size(), 1u);
}

TEST(Agent, RejectedBatchIsQuarantinedAndTheQueueMovesOn) {
  TempDir dir;
  MockTransport transport;
  EXPECT_CALL(transport, deliver(Field(&ReadingBatch::batch_seq, 0)))
      .WillOnce(Return(DeliveryResult::rejected(422, "lat out of range")));
  EXPECT_CALL(transport, deliver(Field(&ReadingBatch::batch_seq, 1)))
      .WillOnce(Return(DeliveryResult::acked({1, 0})));
  SimulatedClock clock(0);
  Agent agent(config(dir / "spool"), transport, clock);
  agent.enqueue({"bus-01", 0, 0, {1, 1}, 6, 950});
  agent.enqueue({"bus-01", 1, 0, {1, 1}, 6, 950});
  const auto report = agent.flush(ConnectivitySchedule::always_on(), 1);
  EXPECT_EQ(report.quarantined, 1u);
  EXPECT_EQ(report.acked, 1u);
  EXPECT_TRUE(agent.queue().empty());

  std::ifstream dead(agent.dead_letter_path());
  std::string line;
  ASSERT_TRUE(std::getline(dead, line));
  const auto rec = json::parse(line);
  EXPECT_EQ(rec["http_status"], 422);
  EXPECT_EQ(rec["batch"]["batch_seq"], 0);
}

TEST(Agent, DepotProfileDeliversOnlyAfterTheDrive) {
  TempDir dir;
  server::IngestService service(server_opts(dir / "server"));
  server::LocalTransport transport(service);
  const auto trace = one_km_trace();
  SimulatedClock clock(trace.front().ts_ms);
  Agent agent(config(dir / "spool"), transport, clock);
  const auto report =
      agent.run_session(trace, ConnectivitySchedule::depot(trace.back().ts_ms));
  EXPECT_EQ(report.acked_during_drive, 0u);
  EXPECT_EQ(report.acked, 150u);
  EXPECT_EQ(report.remaining, 0u);
  EXPECT_TRUE(report.conserved());
  EXPECT_EQ(service.reading_count(), 150u);
}

TEST(Agent, AlwaysOnKeepsLatencyWithinOneTick) {
  TempDir dir;
  server::IngestService service(server_opts(dir / "server"));
  server::LocalTransport transport(service);
  const auto trace = one_km_trace();
  SimulatedClock clock(trace.front().ts_ms);
  Agent agent(config(dir / "spool"), transport, clock);
  const auto report = agent.run_session(trace, ConnectivitySchedule::always_on());
  EXPECT_EQ(report.remaining, 0u);
  EXPECT_LE(report.max_latency_ms, 5000);
  EXPECT_GT(report.acked_during_drive, 100u);
}

TEST(Agent, ChurnSchedulesConserveEveryReading) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    TempDir dir;
    server::IngestService service(server_opts(dir / "server"));
    server::LocalTransport transport(service);
    const auto trace = one_km_trace();
    SimulatedClock clock(trace.front().ts_ms);
    Agent agent(config(dir / "spool"), transport, clock);
    const auto schedule =
        ConnectivitySchedule::random_churn(seed, trace.front().ts_ms, trace.back().ts_ms + 60'000);
    const auto report = agent.run_session(trace, schedule);
    EXPECT_TRUE(report.conserved()) << seed;
    EXPECT_EQ(report.remaining, 0u) << seed;
    EXPECT_EQ(service.reading_count(), trace.size()) << seed;
  }
}

TEST(Agent, RestartFromTheSpoolLosesNothing) {
  TempDir dir;
  server::IngestService service(server_opts(dir / "server"));
  server::LocalTransport transport(service);
  const auto trace = one_km_trace();
  SimulatedClock clock(trace.front().ts_ms);
  {
    Agent agent(config(dir / "spool"), transport, clock);
    const std::span first_half(trace.data(), 75);
    const auto r = agent.run_session(first_half, ConnectivitySchedule::always_down());
    EXPECT_EQ(r.remaining, 75u);
  }
  Agent agent(config(dir / "spool"), transport, clock);
  const std::span second_half(trace.data() + 75, trace.size() - 75);
  const auto r = agent.run_session(second_half, ConnectivitySchedule::always_on());
  EXPECT_EQ(r.carried_over, 75u);
  EXPECT_TRUE(r.conserved());
  EXPECT_EQ(service.reading_count(), 150u);
}

TEST(Agent, ServerSeesSeqsInFifoOrder) {
  TempDir dir;
  MockTransport transport;
  std::vector<std::int64_t> order;
  EXPECT_CALL(transport, deliver(_)).WillRepeatedly([&](const ReadingBatch& b) {
    for (const auto& r : b.readings) order.push_back(r.seq);
    return DeliveryResult::acked({b.readings.size(), 0});
  });
  const auto trace = one_km_trace();
  SimulatedClock clock(trace.front().ts_ms);
  Agent agent(config(dir / "spool"), transport, clock);
  agent.run_session(trace, ConnectivitySchedule::pilot(trace.front().ts_ms, trace.back().ts_ms));
  EXPECT_TRUE(std::is_sorted(order.begin(), order.end()));
  EXPECT_EQ(order.size(), trace.size());
}

TEST(Agent, InvalidConfigIsRejected) {
  TempDir dir;
  MockTransport transport;
  SimulatedClock clock;
  auto c = config(dir.path());
  c.batch_cap = 0;
  EXPECT_THROW(Agent(c, transport, clock), ValidationError);
  c = config(dir.path());
  c.backoff_max_ms = 100;
  EXPECT_THROW(Agent(c, transport, clock), ValidationError);
}

}  // namespace
}  // namespace podas::agent
