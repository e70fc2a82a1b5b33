"""
Caching service for experiment results.
"""

import hashlib
import json
import logging
from datetime import datetime
from typing import Any, Dict, Optional

try:
    import redis.asyncio as redis
    REDIS_AVAILABLE = True
except ImportError:
    REDIS_AVAILABLE = False

from config.settings import settings
from ..models.config import ExperimentConfig
from ..models.results import ExperimentResult
from ..utils.metrics import metrics_manager

logger = logging.getLogger(__name__)


class CacheService:
    """Caches serialized experiment results keyed by the canonical config."""

    def __init__(self):
        self.enabled = REDIS_AVAILABLE and settings.REDIS_URL is not None
        self.ttl = settings.CACHE_TTL
        self._redis = None
        self._local_cache: Dict[str, str] = {}
        self._local_cache_timestamps: Dict[str, datetime] = {}

    async def get_redis_client(self):
        """Get or create the Redis client; None when Redis is not configured or unreachable."""
        if not self.enabled:
            return None

        if self._redis is None:
            try:
                self._redis = redis.from_url(settings.REDIS_URL, decode_responses=True)
                await self._redis.ping()
                logger.info("Redis connection established")
            except Exception as e:
                logger.warning(f"Failed to connect to Redis: {e}")
                self._redis = None

        return self._redis

    @staticmethod
    def cache_key(config: ExperimentConfig) -> str:
        canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return f"experiment:{hashlib.sha256(canonical.encode()).hexdigest()}"

    async def get(self, config: ExperimentConfig) -> Optional[ExperimentResult]:
        cache_key = self.cache_key(config)

        redis_client = await self.get_redis_client()
        if redis_client:
            try:
                cached = await redis_client.get(cache_key)
                if cached:
                    metrics_manager.record_cache_operation("get", "hit")
                    logger.debug(f"Cache hit (Redis): {cache_key}")
                    return ExperimentResult.model_validate_json(cached)
            except Exception as e:
                logger.warning(f"Redis cache get error: {e}")

        if cache_key in self._local_cache:
            age = datetime.now() - self._local_cache_timestamps[cache_key]
            if age.total_seconds() > self.ttl:
                del self._local_cache[cache_key]
                del self._local_cache_timestamps[cache_key]
                metrics_manager.record_cache_operation("get", "expired")
                return None
            metrics_manager.record_cache_operation("get", "hit")
            logger.debug(f"Cache hit (local): {cache_key}")
            return ExperimentResult.model_validate_json(self._local_cache[cache_key])

        metrics_manager.record_cache_operation("get", "miss")
        return None

    async def set(self, config: ExperimentConfig, result: ExperimentResult):
        cache_key = self.cache_key(config)
        payload = result.model_dump_json()

        redis_client = await self.get_redis_client()
        if redis_client:
            try:
                await redis_client.setex(cache_key, self.ttl, payload)
                metrics_manager.record_cache_operation("set", "redis")
                return
            except Exception as e:
                logger.warning(f"Redis cache set error: {e}")

        self._local_cache[cache_key] = payload
        self._local_cache_timestamps[cache_key] = datetime.now()
        self._cleanup_local_cache()
        metrics_manager.record_cache_operation("set", "local")

    def _cleanup_local_cache(self):
        """Drop expired local entries."""
        now = datetime.now()
        expired = [k for k, t in self._local_cache_timestamps.items() if (now - t).total_seconds() > self.ttl]
        for key in expired:
            del self._local_cache[key]
            del self._local_cache_timestamps[key]
        if expired:
            logger.debug(f"Cleaned up {len(expired)} expired cache entries")

    async def clear(self):
        redis_client = await self.get_redis_client()
        if redis_client:
            try:
                keys = await redis_client.keys("experiment:*")
                if keys:
                    await redis_client.delete(*keys)
            except Exception as e:
                logger.warning(f"Redis cache clear error: {e}")
        self._local_cache.clear()
        self._local_cache_timestamps.clear()

    async def get_stats(self) -> Dict[str, Any]:
        stats: Dict[str, Any] = {
            "enabled": self.enabled,
            "local_cache_size": len(self._local_cache),
            "ttl_seconds": self.ttl,
        }
        redis_client = await self.get_redis_client()
        stats["redis_connected"] = redis_client is not None
        return stats

    async def health_check(self) -> bool:
        try:
            redis_client = await self.get_redis_client()
            if redis_client:
                await redis_client.ping()
            return True
        except Exception as e:
            logger.error(f"Cache health check failed: {e}")
            return False

    async def close(self):
        if self._redis:
            await self._redis.close()


# Global cache service instance
cache_service = CacheService()
