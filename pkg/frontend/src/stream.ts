// Server-sent-events consumer with automatic reconnect. All events are
// forwarded to a single dispatch callback; the stale banner runs off the
// arrival clock regardless of connection state.

import type { StreamEvent, TopicName } from './types'

const TOPICS: TopicName[] = [
    'pose',
    'analytics',
    'histogram',
    'sharpness',
    'thumbnail',
    'diagnostics',
    'command',
    'link',
]

export type Dispatch = (event: StreamEvent, atSeconds: number) => void

export interface StreamHandle {
    close(): void
}

export function connectStream(
    baseUrl: string,
    dispatch: Dispatch,
    topics: TopicName[] = TOPICS,
    reconnectDelayMs = 1000,
): StreamHandle {
    let source: EventSource | null = null
    let closed = false
    let retryTimer: ReturnType<typeof setTimeout> | null = null

    const open = () => {
        if (closed) return
        source = new EventSource(`${baseUrl}/stream?topics=${topics.join(',')}`)
        for (const topic of topics) {
            source.addEventListener(topic, (raw) => {
                const msg = raw as MessageEvent<string>
                dispatch({ topic, data: JSON.parse(msg.data) }, Date.now() / 1000)
            })
        }
        source.onerror = () => {
            source?.close()
            source = null
            if (!closed) {
                retryTimer = setTimeout(open, reconnectDelayMs)
            }
        }
    }
    open()
    return {
        close() {
            closed = true
            if (retryTimer !== null) clearTimeout(retryTimer)
            source?.close()
        },
    }
}
