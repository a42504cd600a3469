#include "mouthpipe/control_service.hpp"

#include <atomic>
#include <charconv>
#include <deque>
#include <future>
#include <map>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "mouthpipe/error.hpp"

namespace mouthpipe {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace ws_detail {
class Viewer;
}
using ws_detail::Viewer;

namespace {

int downscale_from_target(std::string_view target, int fallback) {
  const auto q = target.find("downscale=");
  if (q == std::string_view::npos) return fallback;
  auto rest = target.substr(q + 10);
  int v = 0;
  const auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
  return (ec == std::errc() && v >= 1 && v <= 64) ? v : fallback;
}

}  // namespace

struct ControlServer::Impl {
  ConfigStore& store;
  int default_downscale;
  net::io_context ioc{1};
  std::optional<net::executor_work_guard<net::io_context::executor_type>> work;
  tcp::acceptor acceptor{ioc};
  std::thread thread;
  std::set<std::shared_ptr<Viewer>> viewers;  // io thread only
  std::atomic<std::size_t> viewer_count{0};
  std::atomic<std::uint64_t> dropped{0};
  bool running = false;

  Impl(ConfigStore& s, int d) : store(s), default_downscale(d) {}

  void do_accept();
  void add(std::shared_ptr<Viewer> v) {
    viewers.insert(std::move(v));
    viewer_count = viewers.size();
  }
  void remove(const std::shared_ptr<Viewer>& v) {
    viewers.erase(v);
    viewer_count = viewers.size();
  }
};

namespace ws_detail {

struct Outgoing {
  std::shared_ptr<const std::string> text;
  bool droppable = false;
};

class Viewer : public std::enable_shared_from_this<Viewer> {
 public:
  Viewer(tcp::socket socket, ControlServer::Impl& server)
      : ws_(std::move(socket)), server_(server), downscale_(server.default_downscale) {}

  void start() {
    http::async_read(ws_.next_layer(), buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
  }

  void send(std::shared_ptr<const std::string> text, bool droppable) {
    if (droppable) {
      std::size_t pending = 0;
      for (const auto& o : queue_) pending += o.droppable;
      if (pending >= kViewerQueueLimit) {
        // The front entry may be in flight; drop the oldest one behind it.
        auto it = queue_.begin();
        if (writing_ && it != queue_.end()) ++it;
        for (; it != queue_.end(); ++it) {
          if (it->droppable) {
            queue_.erase(it);
            ++server_.dropped;
            break;
          }
        }
      }
    }
    queue_.push_back({std::move(text), droppable});
    if (!writing_) write_next();
  }

  void send_telemetry(const std::shared_ptr<const TelemetryFrame>& frame,
                      std::map<int, std::shared_ptr<const std::string>>& encoded) {
    auto& text = encoded[downscale_];
    if (!text) text = std::make_shared<const std::string>(frame->to_json_text(downscale_));
    send(text, true);
  }

  void close() {
    beast::error_code ec;
    ws_.next_layer().socket().close(ec);
  }

 private:
  void on_request(beast::error_code ec) {
    if (ec || !websocket::is_upgrade(request_)) return;
    downscale_ = downscale_from_target(std::string_view(request_.target().data(), request_.target().size()),
                                       server_.default_downscale);
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(request_, [self = shared_from_this()](beast::error_code e) { self->on_accept(e); });
  }

  void on_accept(beast::error_code ec) {
    if (ec) return;
    ws_.text(true);
    server_.add(shared_from_this());
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      server_.remove(shared_from_this());
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    send(std::make_shared<const std::string>(handle_command_text(server_.store, text)), false);
    do_read();
  }

  void write_next() {
    writing_ = true;
    auto text = queue_.front().text;
    ws_.async_write(net::buffer(*text), [self = shared_from_this(), text](beast::error_code ec, std::size_t) {
      self->on_write(ec);
    });
  }

  void on_write(beast::error_code ec) {
    queue_.pop_front();
    if (ec) {
      writing_ = false;
      queue_.clear();
      server_.remove(shared_from_this());
      return;
    }
    if (queue_.empty()) writing_ = false;
    else write_next();
  }

  websocket::stream<beast::tcp_stream> ws_;
  ControlServer::Impl& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  std::deque<Outgoing> queue_;
  bool writing_ = false;
  int downscale_;
};

}  // namespace ws_detail

void ControlServer::Impl::do_accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<Viewer>(std::move(socket), *this)->start();
    do_accept();
  });
}

ControlServer::ControlServer(ConfigStore& store, int default_downscale)
    : impl_(std::make_unique<Impl>(store, std::max(1, default_downscale))) {}

ControlServer::~ControlServer() { stop(); }

std::uint16_t ControlServer::start(const std::string& address) {
  if (impl_->running) throw Error(ErrorCode::Service, "control service already running");
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::Service, "listen address must be host:port");
  std::string host = address.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[') host = host.substr(1, host.size() - 2);
  if (host.empty() || host == "localhost") host = "127.0.0.1";
  unsigned port = 0;
  const auto ps = address.substr(colon + 1);
  const auto [p, ec] = std::from_chars(ps.data(), ps.data() + ps.size(), port);
  if (ec != std::errc() || p != ps.data() + ps.size() || port > 65535)
    throw Error(ErrorCode::Service, "bad port in " + address);

  try {
    const tcp::endpoint ep(net::ip::make_address(host), std::uint16_t(port));
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(net::socket_base::reuse_address(true));
    impl_->acceptor.bind(ep);
    impl_->acceptor.listen(net::socket_base::max_listen_connections);
  } catch (const boost::system::system_error& e) {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
    throw Error(ErrorCode::Service, "cannot listen on " + address + ": " + e.what());
  }
  const auto bound = impl_->acceptor.local_endpoint().port();
  impl_->work.emplace(net::make_work_guard(impl_->ioc));
  impl_->do_accept();
  impl_->running = true;
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
  return bound;
}

void ControlServer::stop() {
  if (!impl_ || !impl_->running) return;
  std::promise<void> closed;
  net::post(impl_->ioc, [this, &closed] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
    for (const auto& v : impl_->viewers) v->close();
    impl_->viewers.clear();
    impl_->viewer_count = 0;
    closed.set_value();
  });
  closed.get_future().wait();
  impl_->work.reset();
  impl_->ioc.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  impl_->running = false;
}

void ControlServer::publish(std::shared_ptr<const TelemetryFrame> frame) {
  if (!impl_->running || impl_->viewer_count == 0) return;
  net::post(impl_->ioc, [this, frame = std::move(frame)] {
    std::map<int, std::shared_ptr<const std::string>> encoded;
    for (const auto& v : impl_->viewers) v->send_telemetry(frame, encoded);
  });
}

void ControlServer::notify(std::string text) {
  if (!impl_->running) return;
  auto shared = std::make_shared<const std::string>(std::move(text));
  net::post(impl_->ioc, [this, shared] {
    for (const auto& v : impl_->viewers) v->send(shared, false);
  });
}

std::size_t ControlServer::viewers() const { return impl_->viewer_count; }

std::uint64_t ControlServer::dropped() const { return impl_->dropped; }

}  // namespace mouthpipe
