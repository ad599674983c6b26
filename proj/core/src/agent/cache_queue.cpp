#include "podas/agent/cache_queue.hpp"

#include <unistd.h>

#include <fstream>

#include "podas/codec.hpp"

namespace podas::agent {
namespace {

void sync_file(std::FILE* f, bool do_fsync) {
  if (std::fflush(f) != 0) throw StorageFullError("flush failed");
  if (do_fsync && ::fsync(::fileno(f)) != 0) throw StorageFullError("fsync failed");
}

}  // namespace

void CacheQueue::FileCloser::operator()(std::FILE* f) const noexcept {
  if (f) std::fclose(f);
}

CacheQueue::CacheQueue(std::filesystem::path dir, std::string node_id, CacheQueueOptions opts)
    : node_id_(std::move(node_id)), opts_(opts) {
  if (node_id_.empty()) throw ValidationError("node_id must not be empty");
  if (opts_.mem_cap == 0) throw ValidationError("mem_cap must be positive");
  std::filesystem::create_directories(dir);
  log_path_ = dir / (node_id_ + ".spool.jsonl");
  head_path_ = dir / (node_id_ + ".head.json");
  load();
}

CacheQueue::~CacheQueue() = default;

void CacheQueue::open_log(const char* mode) {
  log_.reset(std::fopen(log_path_.c_str(), mode));
  if (!log_) throw StorageFullError("cannot open spool log " + log_path_.string());
}

void CacheQueue::load() {
  if (std::filesystem::exists(head_path_)) {
    const auto head = read_json_file(head_path_);
    head_offset_ = head.at("head_offset").get<std::uint64_t>();
    if (!head.at("last_seq").is_null()) last_seq_ = head.at("last_seq").get<std::int64_t>();
    next_batch_seq_ = head.at("next_batch_seq").get<std::int64_t>();
    if (const auto& p = head.at("pending"); !p.is_null()) {
      pending_ = {p.at("batch_seq").get<std::int64_t>(), p.at("count").get<std::size_t>()};
    }
  }

  std::string text;
  if (std::filesystem::exists(log_path_)) text = read_file(log_path_);
  // A crash during compaction can leave the head past a truncated log.
  if (head_offset_ > text.size()) head_offset_ = text.size();

  std::uint64_t pos = head_offset_;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail
    const std::string_view line(text.data() + pos, nl - pos);
    SensorReading r;
    try {
      r = json::parse(line.begin(), line.end()).get<SensorReading>();
    } catch (const std::exception& e) {
      if (nl + 1 == text.size()) break;  // torn tail that happens to end in '\n'
      throw Error("corrupt spool log " + log_path_.string() + " at byte " +
                  std::to_string(pos) + ": " + e.what());
    }
    const std::uint64_t bytes = nl + 1 - pos;
    if (mem_.size() < opts_.mem_cap) {
      mem_.push_back({r, bytes});
    } else {
      if (on_disk_only_ == 0) disk_offset_ = pos;
      ++on_disk_only_;
    }
    last_seq_ = last_seq_ ? std::max(*last_seq_, r.seq) : r.seq;
    pos = nl + 1;
  }
  if (pos < text.size()) std::filesystem::resize_file(log_path_, pos);
  log_bytes_ = pos;
  if (on_disk_only_ == 0) disk_offset_ = log_bytes_;
  if (pending_ && pending_->second > mem_.size()) pending_.reset();

  open_log("ab");
  if (mem_.empty() && on_disk_only_ == 0 && log_bytes_ > 0) {
    head_offset_ = disk_offset_ = log_bytes_ = 0;
    open_log("wb");
  }
  persist_head();
}

void CacheQueue::persist_head() {
  json head{{"head_offset", head_offset_},
            {"last_seq", nullptr},
            {"next_batch_seq", next_batch_seq_},
            {"pending", nullptr}};
  if (last_seq_) head["last_seq"] = *last_seq_;
  if (pending_) head["pending"] = {{"batch_seq", pending_->first}, {"count", pending_->second}};

  auto tmp = head_path_;
  tmp += ".tmp";
  {
    std::unique_ptr<std::FILE, FileCloser> f(std::fopen(tmp.c_str(), "wb"));
    if (!f) throw StorageFullError("cannot write " + tmp.string());
    const auto text = head.dump() + "\n";
    if (std::fwrite(text.data(), 1, text.size(), f.get()) != text.size()) {
      throw StorageFullError("cannot write " + tmp.string());
    }
    sync_file(f.get(), opts_.fsync);
  }
  std::filesystem::rename(tmp, head_path_);
}

void CacheQueue::enqueue(const SensorReading& reading) {
  if (auto why = check(reading)) throw ValidationError("invalid reading: " + *why);
  if (reading.node_id != node_id_) {
    throw ValidationError("reading for node " + reading.node_id + " enqueued on " + node_id_);
  }
  std::lock_guard lock(mu_);
  if (last_seq_ && reading.seq <= *last_seq_) {
    throw OutOfOrderError("seq " + std::to_string(reading.seq) + " is not after " +
                          std::to_string(*last_seq_));
  }
  const auto line = json(reading).dump() + "\n";
  if (opts_.max_log_bytes && log_bytes_ + line.size() > *opts_.max_log_bytes) {
    throw StorageFullError("spool log for " + node_id_ + " is full");
  }
  if (std::fwrite(line.data(), 1, line.size(), log_.get()) != line.size() ||
      std::fflush(log_.get()) != 0) {
    // Cut any partial record so later appends stay line-aligned.
    std::filesystem::resize_file(log_path_, log_bytes_);
    throw StorageFullError("cannot append to spool log " + log_path_.string());
  }
  sync_file(log_.get(), opts_.fsync);

  if (on_disk_only_ == 0 && mem_.size() < opts_.mem_cap) {
    mem_.push_back({reading, line.size()});
  } else {
    if (on_disk_only_ == 0) disk_offset_ = log_bytes_;
    ++on_disk_only_;
  }
  log_bytes_ += line.size();
  last_seq_ = reading.seq;
}

void CacheQueue::refill() {
  if (on_disk_only_ == 0 || mem_.size() >= opts_.mem_cap) return;
  std::ifstream in(log_path_, std::ios::binary);
  in.seekg(static_cast<std::streamoff>(disk_offset_));
  std::string line;
  while (on_disk_only_ > 0 && mem_.size() < opts_.mem_cap && std::getline(in, line)) {
    mem_.push_back({json::parse(line).get<SensorReading>(), line.size() + 1});
    disk_offset_ += line.size() + 1;
    --on_disk_only_;
  }
  if (on_disk_only_ > 0 && mem_.size() < opts_.mem_cap) {
    throw Error("spool log " + log_path_.string() + " ended early");
  }
}

std::optional<PendingBatch> CacheQueue::next_batch(std::size_t cap) {
  std::lock_guard lock(mu_);
  if (mem_.empty() && on_disk_only_ == 0) return std::nullopt;
  refill();
  if (!pending_) {
    const std::size_t n = std::min({cap == 0 ? 1 : cap, mem_.size()});
    pending_ = {next_batch_seq_++, n};
    persist_head();
  }
  PendingBatch batch;
  batch.batch_seq = pending_->first;
  batch.readings.reserve(pending_->second);
  for (std::size_t i = 0; i < pending_->second && i < mem_.size(); ++i) {
    batch.readings.push_back(mem_[i].reading);
  }
  return batch;
}

void CacheQueue::commit_batch() {
  std::lock_guard lock(mu_);
  if (!pending_) return;
  for (std::size_t i = 0; i < pending_->second && !mem_.empty(); ++i) {
    head_offset_ += mem_.front().bytes;
    mem_.pop_front();
  }
  pending_.reset();
  persist_head();
  if (mem_.empty() && on_disk_only_ == 0) {
    // Fully drained: compact. The head is durable first, so a crash between
    // the two steps only ever leaves an empty queue.
    open_log("wb");
    head_offset_ = disk_offset_ = log_bytes_ = 0;
    persist_head();
  }
}

std::size_t CacheQueue::size() const {
  std::lock_guard lock(mu_);
  return mem_.size() + on_disk_only_;
}

std::size_t CacheQueue::in_memory() const {
  std::lock_guard lock(mu_);
  return mem_.size();
}

std::size_t CacheQueue::spilled() const {
  std::lock_guard lock(mu_);
  return on_disk_only_;
}

std::optional<std::int64_t> CacheQueue::last_seq() const {
  std::lock_guard lock(mu_);
  return last_seq_;
}

}  // namespace podas::agent
