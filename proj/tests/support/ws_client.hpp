#pragma once
// Headless WebSocket client for driving the control service in tests.

#include <chrono>
#include <optional>
#include <string>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

namespace testing_ws {

namespace beast = boost::beast;
namespace net = boost::asio;

class Client {
 public:
  explicit Client(std::uint16_t port, const std::string& target = "/") : ws_(ioc_) {
    net::ip::tcp::endpoint ep(net::ip::make_address("127.0.0.1"), port);
    ws_.next_layer().connect(ep);
    ws_.handshake("127.0.0.1:" + std::to_string(port), target);
    ws_.text(true);
  }

  void send(const nlohmann::json& j) { ws_.write(net::buffer(j.dump())); }
  void send_text(const std::string& s) { ws_.write(net::buffer(s)); }

  /// Next message, or nullopt if nothing arrives in time.
  std::optional<nlohmann::json> read(std::chrono::milliseconds timeout = std::chrono::milliseconds(3000)) {
    if (!pending_) {
      pending_ = true;
      done_ = false;
      ws_.async_read(buffer_, [this](beast::error_code ec, std::size_t) {
        done_ = true;
        ec_ = ec;
      });
    }
    ioc_.restart();
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (!done_ && std::chrono::steady_clock::now() < deadline) ioc_.run_for(std::chrono::milliseconds(5));
    if (!done_) return std::nullopt;
    pending_ = false;
    if (ec_) throw beast::system_error(ec_);
    auto text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    return nlohmann::json::parse(text);
  }

  /// Skips messages until one of the given type arrives.
  std::optional<nlohmann::json> read_type(const std::string& type,
                                          std::chrono::milliseconds timeout = std::chrono::milliseconds(3000)) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < deadline) {
      auto m = read(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now()));
      if (!m) return std::nullopt;
      if ((*m)["type"] == type) return m;
    }
    return std::nullopt;
  }

 private:
  net::io_context ioc_;
  beast::websocket::stream<net::ip::tcp::socket> ws_;
  beast::flat_buffer buffer_;
  bool pending_ = false;
  bool done_ = false;
  beast::error_code ec_;
};

}  // namespace testing_ws
