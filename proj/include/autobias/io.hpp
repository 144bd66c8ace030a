#pragma once

// Little-endian binary containers: EVT1 event logs and FRM1 frame dumps.
//
//   EVT1: "EVT1" u16 width, u16 height, then records
//         {u16 x, u16 y, i8 polarity, u64 t_us}, time-sorted
//   FRM1: "FRM1" u16 width, u16 height, u32 count, then count frames of
//         width*height float32, row-major

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "autobias/cnn.hpp"
#include "autobias/contract.hpp"
#include "autobias/pixel_model.hpp"

namespace autobias {

namespace detail {

template <typename U>
void put_le(std::vector<char>& buf, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) buf.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<U>(v);
}

inline constexpr std::size_t kEventRecordBytes = 13;

}  // namespace detail

class EventWriter {
public:
  EventWriter(const std::string& path, int width, int height) : out_(path, std::ios::binary), path_(path) {
    require(static_cast<bool>(out_), "cannot open " + path + " for writing");
    require(width > 0 && width <= 65535 && height > 0 && height <= 65535, "EVT1 dimensions must fit in u16");
    width_ = width;
    height_ = height;
    buf_.insert(buf_.end(), {'E', 'V', 'T', '1'});
    detail::put_le<std::uint16_t>(buf_, static_cast<std::uint16_t>(width));
    detail::put_le<std::uint16_t>(buf_, static_cast<std::uint16_t>(height));
  }
  EventWriter(const EventWriter&) = delete;
  EventWriter& operator=(const EventWriter&) = delete;
  ~EventWriter() {
    try {
      close();
    } catch (...) {
    }
  }

  void write(const Event& e) {
    require(e.t >= last_t_, "EVT1 events must be time-sorted");
    require(e.x < width_ && e.y < height_, "event outside the EVT1 frame");
    require(e.polarity == 1 || e.polarity == -1, "polarity must be +1 or -1");
    last_t_ = e.t;
    detail::put_le<std::uint16_t>(buf_, e.x);
    detail::put_le<std::uint16_t>(buf_, e.y);
    buf_.push_back(static_cast<char>(e.polarity));
    detail::put_le<std::uint64_t>(buf_, static_cast<std::uint64_t>(e.t));
    ++count_;
    if (buf_.size() >= (1u << 20)) flush();
  }

  void close() {
    if (!out_.is_open()) return;
    flush();
    out_.close();
    require(!out_.fail(), "failed to write " + path_);
  }

  std::uint64_t count() const { return count_; }

private:
  void flush() {
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    require(static_cast<bool>(out_), "failed to write " + path_);
    buf_.clear();
  }

  std::ofstream out_;
  std::string path_;
  std::vector<char> buf_;
  int width_ = 0;
  int height_ = 0;
  std::int64_t last_t_ = 0;
  std::uint64_t count_ = 0;
};

struct EventLog {
  int width = 0;
  int height = 0;
  std::vector<Event> events;
};

inline EventLog read_events(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(bytes.size() >= 8 && std::memcmp(bytes.data(), "EVT1", 4) == 0, path + " is not an EVT1 file");
  require((bytes.size() - 8) % detail::kEventRecordBytes == 0, path + " has a truncated event record");
  EventLog log;
  log.width = detail::get_le<std::uint16_t>(bytes.data() + 4);
  log.height = detail::get_le<std::uint16_t>(bytes.data() + 6);
  const std::size_t n = (bytes.size() - 8) / detail::kEventRecordBytes;
  log.events.reserve(n);
  std::int64_t last = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* r = bytes.data() + 8 + i * detail::kEventRecordBytes;
    Event e;
    e.x = detail::get_le<std::uint16_t>(r);
    e.y = detail::get_le<std::uint16_t>(r + 2);
    e.polarity = static_cast<std::int8_t>(r[4]);
    e.t = static_cast<std::int64_t>(detail::get_le<std::uint64_t>(r + 5));
    require(e.polarity == 1 || e.polarity == -1, path + " has an invalid polarity");
    require(e.x < log.width && e.y < log.height, path + " has an event outside the frame");
    require(e.t >= last, path + " is not time-sorted");
    last = e.t;
    log.events.push_back(e);
  }
  return log;
}

inline void write_events(const std::string& path, int width, int height, std::span<const Event> events) {
  EventWriter w(path, width, height);
  for (const Event& e : events) w.write(e);
  w.close();
}

// Per-frame metadata written next to an FRM1 file, one CSV row per frame:
// label,frequency_hz,lux,bias_fo
struct FrameLabel {
  int label = 0;
  double frequency = 0.0;
  double lux = 0.0;
  int bias_fo = 0;

  friend bool operator==(const FrameLabel&, const FrameLabel&) = default;
};

inline void write_frames(const std::string& path, const FrameSet& set) {
  require(set.width > 0 && set.width <= 65535 && set.height > 0 && set.height <= 65535,
          "FRM1 dimensions must fit in u16");
  require(set.data.size() == set.size() * set.frame_size(), "frame set data size mismatch");
  std::vector<char> buf;
  buf.reserve(12 + set.data.size() * 4);
  buf.insert(buf.end(), {'F', 'R', 'M', '1'});
  detail::put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(set.width));
  detail::put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(set.height));
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(set.size()));
  for (float v : set.data) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    detail::put_le<std::uint32_t>(buf, bits);
  }
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot open " + path + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  out.close();
  require(!out.fail(), "failed to write " + path);
}

// Reads frame data; labels come from the sidecar.
inline FrameSet read_frames(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(bytes.size() >= 12 && std::memcmp(bytes.data(), "FRM1", 4) == 0, path + " is not an FRM1 file");
  FrameSet set;
  set.width = detail::get_le<std::uint16_t>(bytes.data() + 4);
  set.height = detail::get_le<std::uint16_t>(bytes.data() + 6);
  const std::uint32_t count = detail::get_le<std::uint32_t>(bytes.data() + 8);
  const std::size_t values = static_cast<std::size_t>(count) * set.frame_size();
  require(bytes.size() == 12 + values * 4, path + " size does not match its header");
  set.data.resize(values);
  for (std::size_t i = 0; i < values; ++i) {
    const std::uint32_t bits = detail::get_le<std::uint32_t>(bytes.data() + 12 + 4 * i);
    std::memcpy(&set.data[i], &bits, 4);
  }
  set.labels.assign(count, 0);
  return set;
}

inline void write_labels(const std::string& path, std::span<const FrameLabel> labels) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot open " + path + " for writing");
  for (const FrameLabel& l : labels) out << l.label << ',' << l.frequency << ',' << l.lux << ',' << l.bias_fo << '\n';
  out.close();
  require(!out.fail(), "failed to write " + path);
}

inline std::vector<FrameLabel> read_labels(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open " + path);
  std::vector<FrameLabel> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    FrameLabel l;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream row(line);
    row >> l.label >> c1 >> l.frequency >> c2 >> l.lux >> c3 >> l.bias_fo;
    require(!row.fail() && c1 == ',' && c2 == ',' && c3 == ',', "malformed label row in " + path + ": " + line);
    require(l.label == 0 || l.label == 1, "label must be 0 or 1 in " + path);
    labels.push_back(l);
  }
  return labels;
}

// FRM1 file plus its label sidecar.
inline FrameSet load_labeled_frames(const std::string& frames_path, const std::string& labels_path) {
  FrameSet set = read_frames(frames_path);
  const auto labels = read_labels(labels_path);
  require(labels.size() == set.size(), "label row count differs from the frame count");
  for (std::size_t i = 0; i < labels.size(); ++i) set.labels[i] = static_cast<std::uint8_t>(labels[i].label);
  return set;
}

}  // namespace autobias
