"""
Notary HTTP API
Flask application serving a notary's signed history to clients
"""

import logging
import threading
from typing import Optional, Sequence

from flask import Flask, jsonify, request
from flask_cors import CORS
from werkzeug.serving import make_server

from core.errors import AddressError
from core.timeutil import format_rfc3339, utc_now
from onion_identity.onion_id import validate_onion_address
from simulated_network.sim_net import Transport
from web_of_trust.trust_store import TrustStore

from notary_service.crawler import run_crawl
from notary_service.notary_log import NotaryLog, SitePair

logger = logging.getLogger(__name__)

DEFAULT_INTERVAL = 300.0


def create_app(log: NotaryLog) -> Flask:
    """Create and configure the notary Flask application"""
    app = Flask(__name__)

    # Enable CORS
    CORS(app)

    @app.route('/v1/health', methods=['GET'])
    def health():
        """Health check endpoint"""
        entries, _, head = log.snapshot()
        return jsonify({
            'status': 'healthy',
            'entries': len(entries),
            'head_seq': head.seq,
            'last_observed': format_rfc3339(entries[-1].observed_at) if entries else None,
            'timestamp': format_rfc3339(utc_now()),
        })

    @app.route('/v1/head', methods=['GET'])
    def head():
        """Latest entry hash, seq, signature and notary public key"""
        return jsonify(log.head.to_dict(log.notary_public_key))

    @app.route('/v1/history', methods=['GET'])
    def history():
        """All observations of one onion address with the hashes linking them"""
        onion = request.args.get('onion', '')
        if not onion:
            return jsonify({'error': 'Missing onion parameter'}), 400
        try:
            address = validate_onion_address(onion)
        except AddressError as e:
            return jsonify({'error': str(e)}), 400

        # entries first: the head read afterwards covers every returned entry
        items = [item.to_dict() for item in log.history_entries(address)]
        signed_head = log.head
        return jsonify({
            'onion_address': str(address),
            'observations': items,
            'head': signed_head.to_dict(log.notary_public_key),
        })

    @app.errorhandler(404)
    def not_found(error):
        return jsonify({'error': 'Endpoint not found'}), 404

    @app.errorhandler(500)
    def internal_error(error):
        return jsonify({'error': 'Internal server error'}), 500

    return app


def serve_notary(log: NotaryLog, net: Transport, store: TrustStore, targets: Sequence[SitePair],
                 host: str = "127.0.0.1", port: int = 0, interval: float = DEFAULT_INTERVAL,
                 stop_event: Optional[threading.Event] = None) -> None:
    """
    Run the crawler and the HTTP listener together until stop_event is set

    The crawler thread is the log's only writer; request threads read snapshots.
    """
    stop_event = stop_event or threading.Event()
    server = make_server(host, port, create_app(log), threaded=True)
    crawler = threading.Thread(
        target=run_crawl,
        args=(log, net, store, targets, interval),
        kwargs={'stop_event': stop_event},
        name='notary-crawler',
        daemon=True,
    )
    listener = threading.Thread(target=server.serve_forever, name='notary-http', daemon=True)
    crawler.start()
    listener.start()
    logger.info(f"Notary serving on http://{host}:{server.server_port} with {len(targets)} targets")
    try:
        stop_event.wait()
    except KeyboardInterrupt:
        logger.info("Notary interrupted")
        stop_event.set()
    finally:
        server.shutdown()
        server.server_close()
        crawler.join(timeout=5)
