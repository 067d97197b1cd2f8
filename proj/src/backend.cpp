#include "gsv/backend.hpp"

#include <algorithm>
#include <iterator>
#include <thread>

#include <nlohmann/json.hpp>

#include "gsv/digest.hpp"
#include "gsv/text.hpp"

namespace gsv::backend {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string_view kind_name(BackendKind k) {
  switch (k) {
    case BackendKind::HttpChat: return "http_chat";
    case BackendKind::Persona: return "persona";
    case BackendKind::External: return "external";
  }
  return "persona";
}

BackendKind parse_kind(std::string_view s) {
  const auto v = text::to_lower(text::trim(s));
  if (v == "http_chat") return BackendKind::HttpChat;
  if (v == "persona") return BackendKind::Persona;
  if (v == "external") return BackendKind::External;
  throw ValidationError("unknown backend kind: " + std::string(s));
}

std::string BackendId::str() const { return std::string(kind_name(kind)) + ":" + name + ":" + version; }

// --- normalization ----------------------------------------------------------------

namespace {

std::string_view strip_terminal_punctuation(std::string_view s) {
  constexpr std::string_view kWrap = "\"'`*";
  constexpr std::string_view kTrailing = ".!?,;:\"'`*)";
  s = text::trim(s);
  while (!s.empty() && kWrap.find(s.front()) != std::string_view::npos) s.remove_prefix(1);
  while (!s.empty() && kTrailing.find(s.back()) != std::string_view::npos) s.remove_suffix(1);
  return text::trim(s);
}

}  // namespace

std::string normalize_answer(std::string_view raw, const AnswerSpace& space) {
  const auto trimmed = text::trim(raw);
  if (space.contains(trimmed)) return std::string(trimmed);

  const auto stripped = strip_terminal_punctuation(raw);
  for (const auto& label : space.labels()) {
    if (text::iequals(stripped, label)) return label;
  }

  const std::string* found = nullptr;
  for (const auto& label : space.labels()) {
    if (!text::contains_whole_word(raw, label)) continue;
    if (found != nullptr) throw NoMatchError(std::string(raw));  // ambiguous
    found = &label;
  }
  if (found == nullptr) throw NoMatchError(std::string(raw));
  return *found;
}

std::string cache_key(const BackendId& backend, std::string_view prompt_text, const AnswerSpace& space) {
  Digest d;
  d.field("gsv-cache-key/1")
      .field(kind_name(backend.kind))
      .field(backend.name)
      .field(backend.version)
      .field(prompt_text);
  d.field(std::to_string(space.size()));
  for (const auto& label : space.labels()) d.field(label);
  return d.finish_hex();
}

// --- cache ------------------------------------------------------------------------

namespace {

constexpr std::string_view kCacheFormat = "gsv-response-cache";

}  // namespace

ResponseCache::ResponseCache(const fs::path& path) {
  bool has_header = false;
  if (fs::exists(path) && fs::file_size(path) > 0) {
    // Drop a torn final append (no trailing newline) so later appends start on a fresh line.
    std::ifstream in(path, std::ios::binary);
    const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (content.back() != '\n') {
      const auto keep = content.rfind('\n');
      in.close();
      fs::resize_file(path, keep == std::string::npos ? 0 : keep + 1);
    }
  }
  if (fs::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string());
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!text::trim(line).empty()) lines.emplace_back(line_no, line);
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto& [no, content] = lines[i];
      const bool last = i + 1 == lines.size();
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(content);
      } catch (const nlohmann::json::parse_error&) {
        if (last) break;  // torn final append from an interrupted run
        throw FormatError(path.string(), no, "malformed cache line");
      }
      if (!has_header) {
        if (j.value("format", "") != kCacheFormat) throw FormatError(path.string(), no, "not a response cache");
        if (j.value("version", 0) != kFormatVersion) {
          throw FormatError(path.string(), no, "unsupported cache version " + j.value("version", nlohmann::json()).dump());
        }
        has_header = true;
        continue;
      }
      try {
        CacheEntry e{j.at("key").get<std::string>(), j.at("raw").get<std::string>(),
                     j.at("canonical").get<std::string>(), j.value("created_at", "")};
        entries_[e.key] = std::move(e);
      } catch (const nlohmann::json::exception& ex) {
        throw FormatError(path.string(), no, ex.what());
      }
    }
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  file_.open(path, std::ios::binary | std::ios::app);
  if (!file_) throw IoError(path.string(), "cannot write file");
  if (!has_header) {
    ojson header;
    header["format"] = kCacheFormat;
    header["version"] = kFormatVersion;
    file_ << header.dump() << '\n' << std::flush;
  }
}

std::optional<CacheEntry> ResponseCache::get(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(CacheEntry entry) {
  if (file_.is_open()) {
    ojson j;
    j["key"] = entry.key;
    j["raw"] = entry.raw;
    j["canonical"] = entry.canonical;
    j["created_at"] = entry.created_at;
    std::lock_guard lock(file_mutex_);
    file_ << j.dump() << '\n' << std::flush;
  }
  std::unique_lock lock(mutex_);
  entries_[entry.key] = std::move(entry);
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void ResponseCache::flush() {
  std::lock_guard lock(file_mutex_);
  if (file_.is_open()) file_.flush();
}

// --- rate limiting and retries ------------------------------------------------------

RateLimiter::RateLimiter(double tokens_per_second, double burst)
    : rate_(tokens_per_second), burst_(std::max(1.0, burst)), tokens_(burst_), last_(Clock::now()) {}

void RateLimiter::acquire() {
  if (rate_ <= 0.0) return;
  std::unique_lock lock(mutex_);
  while (true) {
    const auto now = Clock::now();
    tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    lock.unlock();
    std::this_thread::sleep_for(wait);
    lock.lock();
  }
}

AnswerService::AnswerService(Backend& backend, ResponseCache& cache, ServiceOptions options)
    : backend_(backend),
      cache_(cache),
      options_(options),
      limiter_(options.requests_per_second, std::max(1.0, options.requests_per_second)),
      rng_(options.seed) {}

std::chrono::milliseconds AnswerService::backoff(int attempt) {
  // Full jitter: uniform in [0, min(max_delay, base * 2^(attempt-1))].
  const auto cap = std::min<std::int64_t>(options_.retry.max_delay.count(),
                                          options_.retry.base_delay.count() << std::min(attempt - 1, 20));
  if (cap <= 0) return std::chrono::milliseconds(0);
  std::lock_guard lock(rng_mutex_);
  return std::chrono::milliseconds(static_cast<std::int64_t>(rng_() % static_cast<std::uint64_t>(cap + 1)));
}

Answer AnswerService::ask(const PromptInstance& prompt) {
  const auto key = cache_key(backend_.id(), prompt.text, prompt.answer_space);
  if (auto hit = cache_.get(key)) return {hit->raw, hit->canonical, true};

  const int max_attempts = std::max(1, options_.retry.max_attempts);
  for (int attempt = 1;; ++attempt) {
    limiter_.acquire();
    ++calls_;
    std::string raw;
    try {
      raw = backend_.complete(prompt);
    } catch (const TransportError& e) {
      if (attempt >= max_attempts) {
        throw BackendError(backend_.id().str() + ": giving up after " + std::to_string(attempt) +
                           " attempts: " + e.what());
      }
      std::this_thread::sleep_for(backoff(attempt));
      // Another worker may have stored the answer while this one waited.
      if (auto hit = cache_.get(key)) return {hit->raw, hit->canonical, true};
      continue;
    }
    auto canonical = normalize_answer(raw, prompt.answer_space);
    cache_.put({key, raw, canonical, text::utc_timestamp()});
    return {std::move(raw), std::move(canonical), false};
  }
}

}  // namespace gsv::backend
