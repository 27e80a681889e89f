# Acoustic CWT test suite
