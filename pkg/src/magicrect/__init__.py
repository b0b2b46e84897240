"""Magic rectangle games: classical, no-signaling and quantum values."""
