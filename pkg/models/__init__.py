# Models package: experiment configuration, reports and CLI payloads
