"""Discrete-event simulator of a sharded relay chain: NPoS validator election,
BABE block production, GRANDPA finality, parachain backing and availability,
candle auctions and the staking economy."""

__version__ = "0.1.0"
